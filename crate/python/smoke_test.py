#!/usr/bin/env python3
"""Smoke test for the agisim Python extension.

Builds the extension if needed, imports it, and exercises the main surface:
config round trip, deterministic episode runs, the analysis suite, and
commitment round trips. Exits nonzero on the first failure.

Usage: python3 python/smoke_test.py [--release]
"""

import json
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def build_and_import(profile: str):
    args = ["cargo", "build", "-p", "agisim-py"]
    if profile == "release":
        args.append("--release")
    subprocess.run(args, cwd=REPO, check=True)
    source = REPO / "target" / profile / "libagisim.so"
    if not source.exists():
        sys.exit(f"extension not found at {source}")
    staging = Path(tempfile.mkdtemp(prefix="agisim_py_"))
    shutil.copy2(source, staging / "agisim.so")
    sys.path.insert(0, str(staging))
    import agisim

    return agisim


def approx(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(abs(a), abs(b), 1.0)


def main():
    profile = "release" if "--release" in sys.argv[1:] else "debug"
    agisim = build_and_import(profile)
    checks = 0

    def ok(condition, label):
        nonlocal checks
        checks += 1
        if not condition:
            sys.exit(f"FAIL: {label}")
        print(f"ok: {label}")

    # Config round trip and defaults.
    config = agisim.SimulationConfig(seed=42)
    parsed = json.loads(config.to_json())
    ok(parsed["seed"] == 42, "default config carries the seed")
    ok(parsed["params"]["phi"] == 0.1, "phi defaults to 0.1")
    ok(parsed["params"]["p_detection"] == 0.8, "p_detection defaults to 0.8")
    ok(parsed["params"]["lambda_entry"] == 0.05, "lambda_entry defaults to 0.05")
    round_tripped = agisim.SimulationConfig.from_json(config.to_json())
    ok(round_tripped.to_json() == config.to_json(), "config JSON round trip")

    # Deterministic episodes.
    config.set_param("horizon", 20)
    config.set_param("lambda_entry", 0.0)
    a = agisim.run_episode(config, episode=0)
    b = agisim.run_episode(config, episode=0)
    ok(a.to_csv() == b.to_csv(), "same seed and episode replay bit-identically")
    ok(a.steps == 20, "trajectory covers the horizon")
    ok(approx(a.discounted_utility(0), b.discounted_utility(0)),
       "discounted utilities agree across replays")

    # Cooperative dynamics grow shared knowledge.
    ok(a.final_knowledge > 0.0, "cooperators accumulate shared knowledge")

    # Condition report on the defaults.
    report = agisim.check(config)
    conditions = report["conditions"]
    ok(conditions["cond1_network_effects"]["holds"], "condition 1 holds on defaults")
    ok(conditions["cond2_verification_affordable"]["holds"], "condition 2 holds on defaults")
    ok(conditions["cond3_punishment_credible"]["holds"], "condition 3 holds on defaults")
    ok(conditions["folk_satisfied"], "folk credibility inequality holds on defaults")

    # Deterrence bound arithmetic.
    ok(approx(agisim.defection_bound(1.0, 1.0, 1.0), 0.5), "defection bound 1/(1+1) = 0.5")
    ok(approx(agisim.defection_bound(0.0, 1.0, 1.0), 1.0), "bound is 1 without audits")

    # Ensemble stats.
    config.episodes = 8
    stats = agisim.run_ensemble(config)
    ok(stats["episodes"] == 8, "ensemble ran the requested episodes")
    ok(len(stats["founder_discounted_utility"]) == 4, "stats cover every founder")

    # Null deviation is exactly neutral under common random numbers.
    # (A long horizon keeps the truncation tail under the analysis gate.)
    config.set_param("horizon", 200)
    config.episodes = 12
    null_report = agisim.deviation_test(config, 0, "grim-trigger")
    ok(null_report["verdict"] == "NoProfitableDeviation", "null deviation verdict")
    ok(null_report["difference"]["mean"] == 0.0, "null deviation difference is exactly zero")
    ok(agisim.deviation_library() == ["always-defect", "defect-once-at-0", "defect-share"],
       "deviation library names")

    # Supermodularity of information sharing.
    supermod = agisim.supermodularity_check(config, samples=200, seed=7)
    ok(supermod["fraction_nonnegative"] == 1.0, "sharing incentives are supermodular")

    # Commitment round trip.
    plan = json.dumps({"architecture": "mlp", "parameters": 7_000_000_000},
                      sort_keys=True, separators=(",", ":")).encode()
    digest = agisim.commit_plan(plan)
    ok(agisim.verify_plan(digest, plan), "committed plan verifies")
    ok(not agisim.verify_plan(digest, plan + b"!"), "tampered plan is rejected")

    # Mechanism helpers.
    ok(agisim.milestone_schedule(3, 10) == [3, 6, 9], "milestone schedule")
    ok(agisim.classify_membership(10.0, 8.0, 10.0, 8.0) == "Core", "tier classification")
    ok(agisim.classify_membership(2.5, 4.0, 10.0, 8.0) == "Associate", "associate tier")

    print(f"\nsmoke test passed: {checks} checks")


if __name__ == "__main__":
    main()
