# summarize_sweep.py
# Read a sweep CSV (main.py sweep-xi) and print per-protocol, per-xi error figures.
# Also writes summary.txt and summary.md next to the CSV (or into --out).

import sys
from pathlib import Path

import pandas as pd

from exceptions import ConfigError
from sampling import SWEEP_COLUMNS, rmse

CSV_PATH = Path("runs/sweep_xi/sweep.csv")


def fmt(v):
    return f"{v:.4g}"


def load_sweep(path: Path) -> pd.DataFrame:
    if not path.exists():
        raise ConfigError(f"CSV not found: {path}", field="csv")
    df = pd.read_csv(path)
    missing = [c for c in SWEEP_COLUMNS if c not in df.columns]
    if missing:
        raise ConfigError(f"not a sweep table, missing columns {missing}", field="csv")
    return df


def summary_table(df: pd.DataFrame) -> pd.DataFrame:
    out = df[["protocol", "xi", "reps"]].copy()
    out["abs_bias"] = (df["bias_re"] ** 2 + df["bias_im"] ** 2) ** 0.5
    out["emp_std"] = df["emp_std"]
    out["mean_stderr"] = df["mean_stderr"]
    out["rmse"] = df.apply(rmse, axis=1)
    return out.sort_values(["protocol", "xi"], kind="stable").reset_index(drop=True)


def summarize(path: Path, out_dir: Path | None = None) -> tuple:
    table = summary_table(load_sweep(path))
    overall = table.groupby("protocol", sort=True)["rmse"].mean()

    # Print per-protocol table
    header = "Protocol, xi, reps, |bias|, emp std, mean stderr, RMSE"
    print(header)
    lines = []
    for row in table.itertuples(index=False):
        line = f"{row.protocol}, {fmt(row.xi)}, {row.reps}, {fmt(row.abs_bias)}, {fmt(row.emp_std)}, {fmt(row.mean_stderr)}, {fmt(row.rmse)}"
        print(line)
        lines.append((row, line))

    print("\nOVERALL (mean RMSE over the grid)")
    for protocol, value in overall.items():
        print(f"{protocol}: {fmt(value)}")

    # Write summaries
    out_dir = path.parent if out_dir is None else out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    txt = out_dir / "summary.txt"
    md = out_dir / "summary.md"

    with open(txt, "w", encoding="utf-8") as f:
        f.write(header + "\n")
        for _, line in lines:
            f.write(line + "\n")
        f.write("\nOVERALL (mean RMSE over the grid)\n")
        for protocol, value in overall.items():
            f.write(f"{protocol}: {fmt(value)}\n")

    with open(md, "w", encoding="utf-8") as f:
        f.write("# Sweep Summary\n\n")
        f.write("| Protocol | xi | reps | abs bias | emp std | mean stderr | RMSE |\n|---|---:|---:|---:|---:|---:|---:|\n")
        for row, _ in lines:
            f.write(
                f"| {row.protocol} | {fmt(row.xi)} | {row.reps} | {fmt(row.abs_bias)} | {fmt(row.emp_std)} | {fmt(row.mean_stderr)} | {fmt(row.rmse)} |\n"
            )
        f.write("\n**Overall**  \n")
        for protocol, value in overall.items():
            f.write(f"- {protocol}: mean RMSE **{fmt(value)}**\n")
        f.write("\nBias is measured against the analytic weak value (simulator affordance).\n")

    print(f"\nWrote: {txt}")
    print(f"Wrote: {md}")
    return txt, md


def main():
    path = Path(sys.argv[1]) if len(sys.argv) > 1 else CSV_PATH
    try:
        summarize(path)
    except ConfigError as exc:
        print(exc.reason(), file=sys.stderr)
        sys.exit(exc.exit_code)


if __name__ == "__main__":
    main()
