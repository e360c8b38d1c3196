# ---
# jupyter:
#   jupytext:
#     formats: py:percent
# ---

# %% [markdown]
# # The sep3d command line
#
# Every scenario is one verb. A run writes a CSV whose header carries the
# full configuration, and `sep3d plot` turns any such CSV into an SVG with
# no other input. Here the verbs are driven from Python through `main`,
# which takes the same argument list as the shell command.

# %%
import os
from pathlib import Path

from sep3d.experiments import default_config, read_csv
from sep3d.experiments.cli import main

OUT = Path(os.environ.get("SEP3D_OUTPUT_DIR", "demo-output")) / "cli"

# %% [markdown]
# ## QFI self-check
#
# Exit status 0 means every route agreed with the closed form to 1e-6.

# %%
status = main(["qfi-report", "--out", str(OUT)])
print("exit status", status)

# %% [markdown]
# ## A custom axial sweep from an INI file
#
# Start from the built-in defaults, shrink the grid, and save it.

# %%
cfg_path = OUT / "axial.ini"
cfg_path.write_text("""\
[experiment]
schema = sep3d-experiment/1
scenario = crb-sweep-axial
quadrature_order = 48

[sweep]
coordinate = l_z
start = 0.02
stop = 0.4
points = 12

[fixed]
l_perp = 0.05, 0.25
phi_l = 0.0
""")
main(["crb-sweep", "--axis", "axial", "--config", str(cfg_path), "--out", str(OUT)])
table, embedded = read_csv(OUT / "crb-sweep-axial.csv")
print(table.columns)
for row in table.as_dicts()[:3]:
    print({k: row[k] for k in ("l_z", "l_perp", "CRB_zz", "singular_flag")})

# %% [markdown]
# ## Plot from the CSV alone
#
# The SVG is byte-identical on every run.

# %%
main(["plot", str(OUT / "crb-sweep-axial.csv"), "--output", str(OUT / "axial.svg")])
print((OUT / "axial.svg").stat().st_size, "bytes")

# %% [markdown]
# ## Defaults of the Monte Carlo scenario
#
# `--paper-scale` switches to 20000 frames of 1e6 photons (a long run).

# %%
print(default_config("mc-variance").to_text())
