"""A complete close-set benchmark run, offline, using the bundled fixtures.

Three dimensions x three cases: an easing dimension scored from tracks,
a squash-and-stretch dimension scored from masks (rebound judged by the
stub VLM), and a judged anticipation dimension with a question bank.
Run it twice and the reports are byte-identical.
"""

import tempfile
from pathlib import Path

from animetric import GatewayConfig, StubTransport, VlmGateway, load_manifest, render_report, run_close_set

FIXTURES = Path(__file__).parent.parent / "tests" / "fixtures"

manifest = load_manifest(FIXTURES / "mini-manifest.json")
print(f"suite '{manifest.suite}': {manifest.case_count()} cases in "
      f"{len(manifest.dimensions)} dimensions\n")

workdir = Path(tempfile.mkdtemp(prefix="close-set-demo-"))
gateway = VlmGateway(
    GatewayConfig(),
    cache_dir=workdir / "vlm-cache",
    transport=StubTransport.from_file(FIXTURES / "stub-answers.json"),
)

report = run_close_set(
    manifest, FIXTURES / "artifacts", gateway, model_name="fixture-model"
)
result = report.models["fixture-model"]

print(f"{'case':12s} {'dimension':18s} score")
for record in result.cases:
    score = "failed" if record.score is None else f"{record.score:6.2f}"
    print(f"{record.case_id:12s} {record.dimension_id:18s} {score}")

print("\nper-dimension (uniform mean of case scores):")
for dim, score in result.dimension_scores.items():
    print(f"  {dim:18s} {score:6.2f}")

paths = render_report(report, workdir / "out")
print(f"\nwrote: {', '.join(p.name for p in paths)}  (under {workdir / 'out'})")
print(f"judge cache digest: {result.provenance['cache_digest'][:16]}...")
print(f"failed cases: {report.failed_cases}")
