"""
Result Analysis
Summarises JSON-lines result records: fidelity equivalence between decoding
modes and throughput scaling with worker count
"""
import json
from typing import Dict, Iterable, List, Optional, Union

import numpy as np
import pandas as pd


class ResultAnalyzer:
    """Loads result records into a DataFrame and reports verdicts on them"""

    def __init__(self, records: Optional[pd.DataFrame] = None):
        self.records = records if records is not None else pd.DataFrame()

    @classmethod
    def from_jsonl(cls, source: Union[str, Iterable[str]]) -> "ResultAnalyzer":
        """Build from a JSON-lines file path or an iterable of lines"""
        if isinstance(source, str):
            with open(source, "r", encoding="utf-8") as handle:
                lines = handle.readlines()
        else:
            lines = list(source)
        rows = [json.loads(line) for line in lines if line.strip()]
        return cls(pd.DataFrame(rows))

    def fidelity_table(self) -> pd.DataFrame:
        """One row per (d, rounds, mode) with the error rate and the paired comparison"""
        df = self.records
        if df.empty or "logical_error_rate" not in df:
            return pd.DataFrame()
        df = df[df["logical_error_rate"].notna()]
        columns = ["d", "rounds", "mode", "shots", "logical_error_rate", "stderr",
                   "paired_diff", "paired_diff_stderr", "within_2sigma"]
        table = df[[c for c in columns if c in df]].copy()
        return table.sort_values(["d", "rounds", "mode"]).reset_index(drop=True)

    def equivalence_verdicts(self) -> Dict[str, bool]:
        """Whether every windowed mode stays within 2 sigma of the global decoder"""
        table = self.fidelity_table()
        if table.empty:
            return {}
        windowed = table[table["mode"] != "global"]
        verdicts = {}
        for mode, group in windowed.groupby("mode"):
            verdicts[mode] = bool(group["within_2sigma"].fillna(False).astype(bool).all())
        return verdicts

    def throughput_table(self) -> pd.DataFrame:
        """r_dec per (d, workers) with speedup over the smallest worker count"""
        df = self.records
        if df.empty or "r_dec" not in df:
            return pd.DataFrame()
        df = df[df["r_dec"].notna()][["d", "workers", "r_dec", "r_dec_stderr"]].copy()
        df = df.sort_values(["d", "workers"]).reset_index(drop=True)
        base = df.groupby("d")["r_dec"].transform("first")
        df["speedup"] = np.round(df["r_dec"] / base, 3)
        return df

    def scaling_summary(self) -> List[Dict]:
        """Per distance: monotone r_dec in workers and the max/min speedup"""
        table = self.throughput_table()
        if table.empty:
            return []
        summary = []
        for d, group in table.groupby("d"):
            r_dec = group["r_dec"].to_numpy()
            summary.append({
                "d": int(d),
                "workers": group["workers"].astype(int).tolist(),
                "monotone": bool(np.all(np.diff(r_dec) >= 0)),
                "max_speedup": float(group["speedup"].max()),
            })
        return summary

    def r_dec_by_distance(self, workers: int) -> pd.Series:
        """Decoding frequency against code distance at a fixed worker count"""
        table = self.throughput_table()
        if table.empty:
            return pd.Series(dtype=float)
        return table[table["workers"] == workers].set_index("d")["r_dec"]
