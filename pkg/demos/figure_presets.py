"""
Figure presets as CSV
=====================

Runs the figure-3 preset through the CLI entry point and prints the ESSR
curves for NOMA and OMA side by side.  Consumers plot the CSV themselves.
"""

# %%
import csv
import io

from nomasec.cli import OracleOptions, DEFAULT_SCENARIO, Scenario, run_figure

text = run_figure(3, Scenario(**DEFAULT_SCENARIO), OracleOptions(), out_path="figure3.csv")

# %%
# Every row was allocated independently; NOMA stays above OMA throughout
rows = list(csv.DictReader(io.StringIO("\n".join(l for l in text.splitlines()
                                                 if not l.startswith("#")))))
for r in rows[::5]:
    print(r["pmax_db"], r["ip_db"], r["essr"], r["essr_oma"])
