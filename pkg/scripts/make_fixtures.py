"""Regenerate the bundled daily-count fixtures.

Each fixture is a 71-day window (2020-05-14 through 2020-07-23) drawn
from the package's own Poisson simulator with a region-specific piecewise
rate schedule, population and seeding, then rendered as cumulative
counts. State-level files carry a recovered column; county-level files
report deaths only, as county sources typically do. Everything is
seeded, so rerunning this script reproduces the files byte for byte.

Usage: python3 scripts/make_fixtures.py [output-dir]
"""
import datetime
import sys
from pathlib import Path

from tfsir.simulate import RateSchedule, SimConfig, simulate_poisson

START = datetime.date(2020, 5, 14)
HORIZON = 71
DEATH_SHARE = 0.05

# name -> (population, i0, r0, breakpoints, beta values, gamma values, seed, recovered column)
REGIONS = {
    "ny": (19_450_000, 30_000, 300_000, (25,), (0.12, 0.09), (0.10, 0.10), 101, True),
    "ca": (39_510_000, 20_000, 80_000, (30,), (0.10, 0.14), (0.10, 0.10), 102, True),
    "fl": (21_480_000, 8_000, 40_000, (35,), (0.09, 0.16), (0.10, 0.10), 103, True),
    "sd": (885_000, 300, 3_500, (), (0.10,), (0.09,), 104, True),
    "wy": (579_000, 120, 800, (), (0.11,), (0.09,), 105, True),
    "us": (328_200_000, 1_200_000, 1_500_000, (30,), (0.105, 0.125), (0.10, 0.10), 106, True),
    "bergen_nj": (932_000, 1_500, 17_000, (), (0.09,), (0.10,), 107, False),
    "miami_dade_fl": (2_717_000, 4_000, 18_000, (35,), (0.09, 0.15), (0.10, 0.10), 108, False),
    "minnehaha_sd": (197_000, 250, 3_300, (), (0.10,), (0.10,), 109, False),
}


def render(name: str) -> str:
    population, i0, r0, breaks, beta, gamma, seed, with_recovered = REGIONS[name]
    schedule = RateSchedule(breakpoints=breaks, beta_values=beta, gamma_values=gamma)
    config = SimConfig(
        n=float(population), i0=float(i0), r0=float(r0),
        horizon=HORIZON, seed=seed, start_date=START,
    )
    series = simulate_poisson(schedule, config)
    if with_recovered:
        lines = ["date,confirmed,recovered,deaths,population"]
        for idx, date in enumerate(series.dates):
            removed = int(series.r[idx])
            deaths = int(DEATH_SHARE * removed)
            lines.append(
                f"{date.isoformat()},{int(series.m[idx])},{removed - deaths},"
                f"{deaths},{population}"
            )
    else:
        lines = ["date,confirmed,deaths,population"]
        for idx, date in enumerate(series.dates):
            lines.append(
                f"{date.isoformat()},{int(series.m[idx])},{int(series.r[idx])},{population}"
            )
    return "\n".join(lines) + "\n"


def main() -> None:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "fixtures"
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in REGIONS:
        path = out_dir / f"{name}.csv"
        path.write_text(render(name))
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
