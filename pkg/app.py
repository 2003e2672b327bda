import logging
import os

import numpy as np
import streamlit as st
from dotenv import load_dotenv

load_dotenv()
logging.basicConfig(level=os.getenv("CRYOLNA_LOG_LEVEL", "INFO").upper())

from lna_metrics import BandSpec
from protocol_runner import (
    Phase1Tolerances,
    Phase2GatingError,
    QualificationError,
    QualificationRunner,
    RunOptions,
    RunStore,
    SpecLimits,
    Verdict,
    format_markdown,
    load_limit_set,
)
from simlab import VirtualTestbed, list_presets, load_preset, operating_point
from thermal_model import effective_temperature, fit_lumped_temperature
from uncertainty_budget import Aggregation, monte_carlo_tdut, propagate_tdut

# --- UI STYLES ---
st.markdown(
    """
    <style>
    @import url('https://fonts.googleapis.com/css2?family=Inter:wght@400;600;700&display=swap');
    html, body, [class*="css"]  {
        font-family: 'Inter', sans-serif !important;
    }
    .main-header {
        font-size: 2.4rem;
        font-weight: 700;
        text-align: center;
        margin-bottom: 0.5rem;
        letter-spacing: 1px;
    }
    .feature-card {
        background: linear-gradient(90deg, #1976d2 0%, #1a237e 100%);
        color: #fff;
        border-radius: 1.2rem;
        padding: 1.5rem 2rem;
        margin-bottom: 1.5rem;
    }
    .verdict-pass { color: #2e7d32; font-weight: 700; font-size: 1.4rem; }
    .verdict-fail { color: #c62828; font-weight: 700; font-size: 1.4rem; }
    .sidebar-footer {
        color: #95a5a6;
        font-size: 0.85rem;
        text-align: center;
        margin-top: 2rem;
    }
    </style>
    """,
    unsafe_allow_html=True,
)

PAGES = [
    "🏠 Overview",
    "🧪 Phase 1: Setup Qualification",
    "📡 Phase 2: Device Measurement",
    "🌡️ Cable Thermal Model",
    "📐 Uncertainty Budget",
    "🗂️ Run Records",
]

# --- SIDEBAR NAVIGATION ---
with st.sidebar:
    st.markdown("## ❄️ cryolna")
    st.caption("Cryogenic LNA characterization")
    page = st.radio("", PAGES, index=0, key="sidebar_nav", label_visibility="collapsed")
    st.markdown('<div class="sidebar-footer">Virtual testbed: TRL, Y-factor, P1dB</div>', unsafe_allow_html=True)


# --- SESSION STATE INIT ---
def init_session():
    if "run_store" not in st.session_state:
        st.session_state.run_store = RunStore()
    if "runner" not in st.session_state:
        st.session_state.runner = QualificationRunner(st.session_state.run_store)
    if "last_phase1" not in st.session_state:
        st.session_state.last_phase1 = None
    if "last_phase2" not in st.session_state:
        st.session_state.last_phase2 = None


init_session()


def run_options_form(key: str) -> RunOptions:
    col1, col2, col3 = st.columns(3)
    with col1:
        seed = st.number_input("Seed (0 = scenario default)", min_value=0, value=0, step=1, key=f"{key}_seed")
    with col2:
        mode = st.selectbox("Cable temperature", ["per_frequency", "lumped"], key=f"{key}_mode")
    with col3:
        sensor = st.selectbox("Cold reference", ["attenuator", "lna_base"], key=f"{key}_sensor")
    offset = st.number_input("Loss-table fault injection (dB)", value=0.0, step=0.1, key=f"{key}_offset")
    return RunOptions(seed=int(seed) or None, cable_temperature_mode=mode, cold_sensor=sensor,
                      loss_table_offset_db=float(offset))


def show_record(record):
    css = "verdict-pass" if record.verdict is Verdict.PASS else "verdict-fail"
    st.markdown(f'<div class="{css}">{record.verdict.value}</div>', unsafe_allow_html=True)
    if record.cause:
        st.caption(f"Cause: {record.cause}")
    col1, col2, col3, col4 = st.columns(4)
    col1.metric("Flatness", f"{record.metrics['flatness_db']:.3f} dB")
    col2.metric("Peak gain", f"{record.metrics['peak_gain_db']:.2f} dB")
    t_max = record.metrics.get("t_dut_max_k")
    col3.metric("Max T_DUT", f"{t_max:.2f} K" if t_max is not None else "n/a")
    sigma = record.uncertainty.get("analytic", {}).get("sigma_k")
    col4.metric("σ(T_DUT)", f"{sigma * 1e3:.0f} mK" if sigma is not None else "n/a")

    f_ghz = np.asarray(record.trace("gain_db").frequency_hz) / 1e9
    st.subheader("Gain and match")
    st.line_chart({"GHz": f_ghz, **{name: record.trace(name).values for name in ("gain_db", "gain_raw_db")}},
                  x="GHz")
    st.line_chart({"GHz": f_ghz, **{name: record.trace(name).values for name in ("s11_db", "s22_db")}}, x="GHz")
    st.subheader("Noise temperature")
    st.line_chart({"GHz": f_ghz, "t_dut_k": record.trace("t_dut_k").values}, x="GHz")
    st.subheader("Limit outcomes")
    st.table([o.model_dump(exclude={"violations_hz"}) for o in record.outcomes])
    with st.expander("Datasheet"):
        st.markdown(format_markdown(record))


# --- PAGE 1: OVERVIEW ---
if page == PAGES[0]:
    st.markdown('<h1 class="main-header">❄️ Cryogenic LNA Characterization</h1>', unsafe_allow_html=True)
    st.markdown(
        """
        <div class="feature-card">
        Two-phase qualification on a virtual cryostat testbed: in-situ TRL calibration,
        cold-attenuator Y-factor noise temperature, gain compression and a propagated
        uncertainty budget. Phase 1 qualifies the setup with a control LNA; Phase 2
        measures a device against the integrator's limits.
        </div>
        """,
        unsafe_allow_html=True,
    )
    st.write("Available scenario presets:", ", ".join(list_presets()))
    st.write(f"Run records in `{st.session_state.run_store.storage_dir}`: "
             f"{len(st.session_state.run_store.list_records())}")

# --- PAGE 2: PHASE 1 ---
elif page == PAGES[1]:
    st.header("🧪 Phase 1: qualify the test setup")
    preset = st.selectbox("Control scenario", list_presets(), index=list_presets().index("lna_c"))
    options = run_options_form("phase1")
    zero = st.checkbox("Zero tolerances (noise-free self-check)")
    if st.button("▶️ Run Phase 1"):
        scenario = load_preset(preset)
        if zero:
            scenario = scenario.noiseless()
        with st.spinner("Calibrating and measuring..."):
            try:
                record = st.session_state.runner.run_phase1(
                    scenario, load_limit_set(f"{scenario.name}_phase1"),
                    Phase1Tolerances.zero() if zero else Phase1Tolerances(), options,
                )
                st.session_state.last_phase1 = record
            except (QualificationError, KeyError) as e:
                st.error(f"Phase 1 could not run: {e}")
    if st.session_state.last_phase1:
        show_record(st.session_state.last_phase1)

# --- PAGE 3: PHASE 2 ---
elif page == PAGES[2]:
    st.header("📡 Phase 2: measure a device")
    preset = st.selectbox("Device scenario", list_presets(), index=list_presets().index("lna_t"))
    scenario = load_preset(preset)
    col1, col2 = st.columns(2)
    with col1:
        f_low = st.number_input("Band low (GHz)", value=scenario.band.f_low_hz / 1e9)
        max_t = st.number_input("Max noise temperature (K)", value=8.0)
    with col2:
        f_high = st.number_input("Band high (GHz)", value=scenario.band.f_high_hz / 1e9)
        max_flat = st.number_input("Max flatness (dB)", value=4.0)
    options = run_options_form("phase2")
    if st.button("▶️ Run Phase 2"):
        limits = SpecLimits(band=BandSpec.ghz(f_low, f_high), max_noise_temperature_k=max_t,
                            max_flatness_db=max_flat)
        with st.spinner("Measuring device..."):
            try:
                st.session_state.last_phase2 = st.session_state.runner.run_phase2(
                    scenario, limits, st.session_state.last_phase1, options)
            except Phase2GatingError as e:
                st.warning(f"🔒 {e}")
            except QualificationError as e:
                st.error(f"Phase 2 could not run: {e}")
    if st.session_state.last_phase2:
        show_record(st.session_state.last_phase2)

# --- PAGE 4: CABLE THERMAL MODEL ---
elif page == PAGES[3]:
    st.header("🌡️ Cable thermal model")
    preset = st.selectbox("Scenario", list_presets())
    testbed = VirtualTestbed(load_preset(preset))
    profile = testbed.input_profile
    t_eff = effective_temperature(profile)
    t_fit = fit_lumped_temperature(testbed.input_cable_noise, profile.total_loss)
    st.metric("Lumped T_cable (input run)", f"{t_fit:.1f} K")
    st.subheader("Element temperatures along the input run")
    st.line_chart({"element": np.arange(profile.temperatures.size), "kelvin": profile.temperatures}, x="element")
    st.subheader("Per-frequency effective temperature T_eff/(L-1)")
    st.line_chart({"GHz": testbed.grid.points / 1e9, "kelvin": t_eff.values}, x="GHz")

# --- PAGE 5: UNCERTAINTY BUDGET ---
elif page == PAGES[4]:
    st.header("📐 Uncertainty budget")
    preset = st.selectbox("Scenario", list_presets())
    scenario = load_preset(preset)
    f_ghz = st.slider("Frequency (GHz)", scenario.band.f_low_hz / 1e9, scenario.band.f_high_hz / 1e9,
                      0.5 * (scenario.band.f_low_hz + scenario.band.f_high_hz) / 1e9)
    aggregation = st.radio("Aggregation", [a.value for a in Aggregation], horizontal=True)
    budget = scenario.budget.model_copy(update={"aggregation": Aggregation(aggregation)})
    op = operating_point(scenario, f_ghz * 1e9)
    result = propagate_tdut(budget, op)
    st.metric("σ(T_DUT)", f"{result.sigma_k * 1e3:.1f} mK")
    st.table([t.to_dict() for t in result.terms])
    if st.button("🎲 Monte Carlo check (10⁵ samples)"):
        with st.spinner("Sampling..."):
            mc = monte_carlo_tdut(budget, op, n=100_000, seed=0)
        st.write(f"Monte Carlo σ = {mc.sigma_k * 1e3:.1f} mK, "
                 f"95% interval {mc.p025_k:.3f} to {mc.p975_k:.3f} K")

# --- PAGE 6: RUN RECORDS ---
elif page == PAGES[5]:
    st.header("🗂️ Run records")
    store = st.session_state.run_store
    paths = list(reversed(store.list_records()))
    if not paths:
        st.info("No run records yet.")
    for path in paths:
        record = store.load_record(path)
        with st.expander(f"{path.stem}: phase {record.phase}, {record.device}, {record.verdict.value}"):
            st.markdown(format_markdown(record))
            st.download_button("⬇️ Record JSON", record.to_json(), file_name=path.name,
                               mime="application/json", key=f"json_{path.stem}")
            st.download_button("⬇️ Datasheet", format_markdown(record), file_name=f"{record.run_id}.md",
                               mime="text/markdown", key=f"md_{path.stem}")
