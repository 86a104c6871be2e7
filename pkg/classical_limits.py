"""
Classical Limits - Main Entry Point
================================================
Scenario-driven runs of the classical-limit computations:
- Kepler orbits against the analytic solution
- Circular-orbit transition amplitudes and the optimal coupling
- The L0(T, V) model along an escape trajectory
- Plane-wave scattering cross sections
- The verification suite

Usage:
    python classical_limits.py verify --out results/verify
    python classical_limits.py likelihood --scenario scenarios/circular_orbit.json
    python classical_limits.py cross-section --sweep L0=3e3,1e4 --threads 2
"""
import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional, Tuple

# Add src to path
sys.path.insert(0, str(Path(__file__).parent))

from src.errors import ScenarioError
from src.io_outputs import save_text, write_result
from src.run_manifest import generate_run_manifest
from src.scenario import KINDS, default_scenario, load_scenario, run_scenario, sweep


def print_banner():
    print("\n" + "="*60)
    print("   CLASSICAL LIMITS")
    print("   Likelihoods, couplings and cross sections from packet states")
    print("="*60 + "\n")


def parse_sweep(spec: str) -> Tuple[str, List[float]]:
    """'AXIS=v1,v2,...' -> (axis, [v1, v2, ...])."""
    if "=" not in spec:
        raise ScenarioError([f"--sweep: expected AXIS=v1,v2,..., got {spec!r}"])
    axis, _, raw = spec.partition("=")
    try:
        values = [float(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise ScenarioError([f"--sweep: values must be numbers, got {raw!r}"])
    if not axis or not values:
        raise ScenarioError([f"--sweep: expected AXIS=v1,v2,..., got {spec!r}"])
    return axis.strip(), values


def run(
    command: str,
    scenario_path: Optional[str] = None,
    out_dir: Optional[str] = None,
    fmt: Optional[str] = None,
    threads: int = 1,
    tolerance: Optional[float] = None,
    sweep_spec: Optional[str] = None,
) -> dict:
    """
    Load (or default) the scenario, run it and write all artifacts.

    Returns:
        Dictionary with the run result, written paths and elapsed time
    """
    start_time = time.time()

    print("[1/3] Loading scenario...")
    scenario = load_scenario(scenario_path) if scenario_path else default_scenario(command)
    if scenario.kind != command:
        raise ScenarioError([f"kind: scenario is '{scenario.kind}' but the command is '{command}'"],
                            scenario.source)
    if tolerance is not None:
        if not tolerance > 0:
            raise ScenarioError(["--tolerance: must be positive"], scenario.source)
        scenario.tolerance = tolerance
    if fmt:
        scenario.format = fmt
    out = Path(out_dir or scenario.output or f"outputs/{command}")
    print(f"   Scenario: {scenario.name} ({scenario.source or 'defaults'})")
    print(f"   Units:    {scenario.units.length_unit}, λ_c = {scenario.units.compton_length:.6g}")
    print(f"   SHA-256:  {scenario.digest()[:16]}...")

    print("[2/3] Computing...")
    sweep_info = None
    if sweep_spec:
        axis, values = parse_sweep(sweep_spec)
        result = sweep(scenario, axis, values, threads=threads)
        sweep_info = {"axis": axis, "values": values}
        stem = f"sweep_{axis}"
        print(f"   Swept {axis} over {len(values)} values ({result.summary['failed']} failed)")
    else:
        result = run_scenario(scenario, threads=threads)
        stem = command.replace("-", "_")
        print(f"   {len(result.rows)} rows")

    print("[3/3] Writing outputs...")
    written = write_result(result, scenario.digest(), out / stem, scenario.format)
    outputs = [(written, scenario.format, len(result.rows))]
    if result.report:
        report_path = save_text(out / "verification.txt", result.report)
        outputs.append((report_path, "text", len(result.rows)))
        print(result.report)

    elapsed = time.time() - start_time
    manifest = generate_run_manifest(scenario, outputs, elapsed, out / "run_manifest.json",
                                     summary=result.summary, sweep=sweep_info)
    return {
        "result": result,
        "manifest": manifest,
        "outputs": [str(p) for p, _, _ in outputs],
        "output_dir": str(out),
        "elapsed_sec": elapsed,
    }


def main():
    print_banner()

    parser = argparse.ArgumentParser(
        description="Classical limits of packet-state likelihoods",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python classical_limits.py verify --threads 4
  python classical_limits.py orbit --scenario scenarios/kepler_orbit.json --format json
  python classical_limits.py likelihood --sweep theta=0.5,1,2,4
  python classical_limits.py optimize-g --sweep r=1e3,1e4,1e5
        """
    )
    parser.add_argument("command", choices=KINDS, help="Scenario kind to run")
    parser.add_argument("--scenario", "-s", default=None, help="Scenario JSON file (default: built-in defaults)")
    parser.add_argument("--out", "-o", default=None, help="Output directory (default: outputs/<command>)")
    parser.add_argument("--format", choices=["csv", "json"], default=None, help="Output format (default: csv)")
    parser.add_argument("--threads", type=int, default=1, help="Worker threads for sweeps and verify (default: 1)")
    parser.add_argument("--tolerance", type=float, default=None, help="Override the scenario tolerance")
    parser.add_argument("--sweep", default=None, help="Sweep one parameter: AXIS=v1,v2,...")
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging")

    args = parser.parse_args()
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        out = run(
            command=args.command,
            scenario_path=args.scenario,
            out_dir=args.out,
            fmt=args.format,
            threads=args.threads,
            tolerance=args.tolerance,
            sweep_spec=args.sweep,
        )
    except ScenarioError as e:
        print("\n❌ Error: invalid scenario")
        print(json.dumps({"errors": e.messages, "source": e.path}, indent=2, ensure_ascii=False),
              file=sys.stderr)
        sys.exit(2)
    except Exception as e:
        print(f"\n❌ Error: {e}")
        sys.exit(1)

    result = out["result"]
    print("\n" + "="*60)
    print("✅ RUN COMPLETE" if result.passed is not False else "❌ VERIFICATION FAILED")
    print("="*60)
    for key, value in list(result.summary.items())[:8]:
        if isinstance(value, float):
            print(f"   {key:<24} {value:.6g}")
        else:
            print(f"   {key:<24} {value}")
    print(f"   {'time':<24} {out['elapsed_sec']:.1f}s")
    print(f"\n📁 Outputs: {out['output_dir']}/")
    for path in out["outputs"]:
        print(f"   ├── {Path(path).name}")
    print("   └── run_manifest.json")
    print()

    if result.passed is False:
        sys.exit(1)


if __name__ == "__main__":
    main()
