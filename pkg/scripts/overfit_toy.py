"""Fit a toy SPT to a handful of synthetic template/search pairs and report loss and IoU."""

import argparse
import logging

from spt_rgbd.training import overfit_experiment


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--channels", type=int, default=64)
    p.add_argument("--pairs", type=int, default=20)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    r = overfit_experiment(args.channels, args.pairs, args.steps, args.seed, log_every=50)
    print(f"steps {len(r.losses)}  loss {r.losses[0]:.4f} -> {r.final_loss:.4f} "
          f"({100 * r.loss_decrease:.1f}% decrease)  mean IoU {r.mean_iou:.3f}")


if __name__ == "__main__":
    main()
