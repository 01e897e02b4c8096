"""Regenerate the acceptance instances and their best-known files under tests/data.

Best-known values come from Full-Restart with ten times the acceptance
iteration budget (1500 iterations per state), 32 ants, two runs per instance.

    python3 scripts/make_reference.py
"""

from pathlib import Path

from herder import cli

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"
SEEDS = (101, 102, 103, 104, 105)


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    for seed in SEEDS:
        ds = DATA / f"accept_{seed}.dmkp"
        bk = DATA / f"accept_{seed}.best"
        assert cli.main(["generate", "--generate", f"100,10,30,0.1,{seed}", "--output", str(ds)]) == 0
        assert cli.main(["reference", "--dataset", str(ds), "--budget", "iters", "--iters", "1500",
                         "--ants", "32", "--runs", "2", "--seed", "2024", "--output", str(bk)]) == 0


if __name__ == "__main__":
    main()
