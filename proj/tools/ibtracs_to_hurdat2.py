#!/usr/bin/env python3
"""Convert IBTrACS WMO-agency North Atlantic rows into HURDAT2-format text.

For the North Atlantic the WMO agency is NHC, so the position, wind and
pressure values are the HURDAT2 best-track values. The IBTrACS file carries
no storm names, status codes or record identifiers, so:

  * the name field holds the IBTrACS serial id (e.g. 2012296N14283),
  * the status code is derived from wind (TD < 34 kt <= TS < 64 kt <= HU),
  * storms are numbered per season in order of first fix,
  * wind radii columns are written as -999.

Usage:
  python3 tools/ibtracs_to_hurdat2.py wmo.csv > data/atlantic_1980_2022.hurdat2.txt

The input is the `wmo.csv` table bundled with the huracanpy package
(huracanpy/_data/_ibtracs_files/wmo.csv).
"""

import csv
import sys
from collections import defaultdict
from datetime import datetime


def status_for(wind):
    if wind is None:
        return "  "
    if wind < 34:
        return "TD"
    if wind < 64:
        return "TS"
    return "HU"


def coord(value, pos, neg, width):
    hemi = pos if value >= 0 else neg
    return f"{abs(value):.1f}{hemi}".rjust(width)


def main(path):
    storms = defaultdict(list)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            if row["basin"] != "NA":
                continue
            t = datetime.strptime(row["time"], "%Y-%m-%d %H:%M:%S")
            lon = float(row["lon"])
            if lon > 180.0:
                lon -= 360.0
            wind = int(round(float(row["wind"]))) if row["wind"] else None
            pres = int(round(float(row["slp"]))) if row["slp"] else None
            storms[row["track_id"]].append((t, float(row["lat"]), lon, wind, pres))

    by_season = defaultdict(list)
    for sid, pts in storms.items():
        pts.sort(key=lambda p: p[0])
        by_season[int(sid[:4])].append((pts[0][0], sid))

    out = sys.stdout
    for season in sorted(by_season):
        for number, (_, sid) in enumerate(sorted(by_season[season]), start=1):
            pts = storms[sid]
            out.write(f"AL{number:02d}{season},{sid:>19},{len(pts):>7},\n")
            for t, lat, lon, wind, pres in pts:
                fields = [
                    t.strftime("%Y%m%d"),
                    t.strftime(" %H%M"),
                    " ",
                    " " + status_for(wind),
                    coord(lat, "N", "S", 6),
                    coord(lon, "E", "W", 7),
                    f"{wind if wind is not None else -99:>4}",
                    f"{pres if pres is not None else -999:>5}",
                ]
                fields += ["-999".rjust(5)] * 12
                out.write(",".join(fields) + ",\n")


if __name__ == "__main__":
    main(sys.argv[1])
