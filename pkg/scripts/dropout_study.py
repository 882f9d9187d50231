#!/usr/bin/env python3
"""How ovIoU degrades as detections go missing.

    python3 scripts/dropout_study.py --probs 0.05 0.1 0.2 --seeds 50
"""

import argparse
import json

import numpy as np

from roofvec.metrics import evaluate
from roofvec.pipeline import run_building
from roofvec.synth import CorruptionSpec, corrupt, synthetic_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--probs", type=float, nargs="+", default=[0.05, 0.1, 0.2])
    ap.add_argument("--seeds", type=int, default=50)
    args = ap.parse_args()

    suite = synthetic_suite(range(args.seeds))
    rows = []
    for p in args.probs:
        ov, dangling, skipped = [], 0, 0
        for case in suite:
            noisy = corrupt(case.edges, CorruptionSpec(drop_prob=p, seed=case.template.seed))
            res = run_building(noisy, case.image_size)
            d = res.diagnostics_dict()
            dangling += len(d["polygonize"]["dangling_edges"])
            skipped += len(d["faces"]["skipped"])
            ov.append(evaluate(res.faces, case.truth, case.image_size).oviou)
        rows.append({"drop": p, "mean_oviou": float(np.mean(ov)), "min_oviou": float(np.min(ov)), "dangling": dangling, "skipped": skipped})
        r = rows[-1]
        print(f"drop {p:.2f}: mean ovIoU {r['mean_oviou']:.3f}, min {r['min_oviou']:.3f}, dangling {dangling}, skipped {skipped}")
    print(json.dumps(rows))


if __name__ == "__main__":
    main()
