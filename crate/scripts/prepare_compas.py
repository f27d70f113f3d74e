"""Derive the 6-feature COMPAS table used by the examples and acceptance tests.

Input: ProPublica's compas-scores-two-years.csv (public release).
Filters follow ProPublica's analysis notebook; the result has 6172 rows.

    python3 scripts/prepare_compas.py compas-scores-two-years.csv crates/core/data/compas.csv
"""
import sys

import pandas as pd


def main(src, dst):
    df = pd.read_csv(src)
    df = df[
        (df.days_b_screening_arrest <= 30)
        & (df.days_b_screening_arrest >= -30)
        & (df.is_recid != -1)
        & (df.c_charge_degree != "O")
        & (df.score_text != "N/A")
    ]
    custody = (pd.to_datetime(df.c_jail_out) - pd.to_datetime(df.c_jail_in)).dt.days
    out = pd.DataFrame(
        {
            "age": df.age,
            "sex": df.sex,
            "race": df.race,
            "priors_count": df.priors_count,
            "charge_degree": df.c_charge_degree,
            "custody_length": custody,
            "two_year_recid": df.two_year_recid,
        }
    )
    out.to_csv(dst, index=False)
    print(f"wrote {len(out)} rows to {dst}")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
