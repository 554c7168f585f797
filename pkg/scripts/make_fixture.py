"""Regenerate the bundled high-tide-flooding sample dataset.

The values are synthetic: an exponential growth curve per scenario, starting
from a shared present-day level, shaped to resemble Northeast-average
high-tide-flooding day projections (slow growth in the low scenario,
accelerating growth in the extreme one). No randomness; reruns are
byte-identical.

    python scripts/make_fixture.py
"""

import csv
import math
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "climate_contingent" / "data" / "htf_northeast_sample.csv"

LOCATION = "northeast_avg"
BASE_YEAR = 2021
YEARS = range(2021, 2047)
BASE_DAYS = 4.0
# per-year exponential growth rate by scenario, least to most extreme
GROWTH = {
    "low": 0.020,
    "int low": 0.040,
    "int": 0.065,
    "int high": 0.090,
    "high": 0.110,
    "extreme": 0.130,
}


def main():
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["location", "scenario", "year", "value"])
        for scen, g in GROWTH.items():
            for y in YEARS:
                w.writerow([LOCATION, scen, y, f"{BASE_DAYS * math.exp(g * (y - BASE_YEAR)):.1f}"])
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
