import logging
import os

from dotenv import load_dotenv

from protocol_runner import QualificationRunner

load_dotenv()
logging.basicConfig(level=os.getenv("CRYOLNA_LOG_LEVEL", "INFO").upper())
logger = logging.getLogger(__name__)

# Ensure output in the current directory
output_dir = os.path.dirname(os.path.abspath(__file__))

# Phase 1 and Phase 2 share one node sequence; Phase 2 gating runs before the graph is invoked
try:
    runner = QualificationRunner()
    graph = runner.graph.get_graph(xray=True)
    with open(os.path.join(output_dir, "qualification_graph.mmd"), "w", encoding="utf-8") as f:
        f.write(graph.draw_mermaid())
    img = graph.draw_mermaid_png()
    with open(os.path.join(output_dir, "qualification_graph.png"), "wb") as f:
        f.write(img)
    print("Qualification graph saved as qualification_graph.png")
except Exception as e:
    logger.error(f"Error visualizing qualification graph: {e}")
