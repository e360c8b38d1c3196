# ---
# jupyter:
#   jupytext:
#     formats: py:percent
# ---

# %% [markdown]
# # Counting photons in the first four Zernike modes
#
# Projecting the image onto piston, the two tilts and defocus gives four
# channel probabilities plus a complement channel for everything else.
# Their classical Fisher information approaches the QFI as l -> 0, which is
# what removes the diffraction-limited divergence of direct imaging.

# %%
import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from sep3d import (
    ProbabilityConsistencyError,
    SMALL_L,
    channel_probabilities,
    crb_from_fisher,
    fisher_matrix,
    qfi_clear_analytic,
    zernike_modes,
    zernike_probability_exact,
    zernike_probability_small,
)

OUT = Path(os.environ.get("SEP3D_OUTPUT_DIR", "demo-output"))
OUT.mkdir(parents=True, exist_ok=True)
modes = zernike_modes()
H = qfi_clear_analytic()

# %% [markdown]
# ## Probabilities
#
# Exact overlaps against the quadratic small-l expansion. The relative gap
# closes like |l|^2.

# %%
for s in (0.08, 0.04, 0.02, 0.01):
    l = (s, s, s)
    pe = [zernike_probability_exact(n, l) for n in (2, 3, 4)]
    ps = [zernike_probability_small(n, l) for n in (2, 3, 4)]
    print(f"l = {s:5.2f}", "rel gap", np.round(np.abs(np.array(pe) / ps - 1), 6))

probs = channel_probabilities(modes, (0.25, 0.25, 0.25))
print("exact P at 0.25^3:", np.round(probs.p, 5), "complement", round(probs.p_bar, 5))
# the expansion already overshoots a total of one here
try:
    channel_probabilities(modes, (0.25,) * 3, model=SMALL_L)
except ProbabilityConsistencyError as err:
    print("small-l at 0.25^3:", err)

# %% [markdown]
# ## Fisher information and its gap to the QFI

# %%
for l in [(0.0, 0.0, 0.0), (0.05, 0.05, 0.05), (0.25, 0.25, 0.25), (0.5, 0.1, 0.3)]:
    J = fisher_matrix(modes, l).matrix
    print(l, "diag J / diag H =", np.round(np.diag(J) / np.diag(H), 4))

# %% [markdown]
# ## Transverse bound against l_x
#
# Full 3x3 inverse of the Fisher matrix, l_z fixed at 0.025.

# %%
lx = np.linspace(0.025, 0.5, 20)
fig, ax = plt.subplots(figsize=(5, 3.5))
for ly in (0.025, 0.25):
    crb = [crb_from_fisher(fisher_matrix(modes, (x, ly, 0.025)).matrix).crb[0, 0] for x in lx]
    ax.plot(lx, crb, marker="o", ms=3, label=f"l_y = {ly}")
ax.axhline(1 / H[0, 0], color="k", ls="--", lw=0.8, label="QCRB")
ax.set_xlabel("l_x")
ax.set_ylabel("CRB_xx per photon")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "zernike_crb_transverse.png", dpi=120)

# %% [markdown]
# ## Axial bound against l_z
#
# The bound on l_z rises as l_z -> 0 when l_perp is nonzero; the
# divergence point moves toward zero with l_perp.

# %%
lz = np.linspace(0.01, 0.5, 50)
fig, ax = plt.subplots(figsize=(5, 3.5))
for lp in (0.025, 0.05, 0.125, 0.25):
    crb = [crb_from_fisher(fisher_matrix(modes, (lp, 0.0, z)).matrix).crb[2, 2] for z in lz]
    ax.semilogy(lz, crb, label=f"l_perp = {lp}")
ax.axhline(1 / H[2, 2], color="k", ls="--", lw=0.8, label="QCRB")
ax.set_xlabel("l_z")
ax.set_ylabel("CRB_zz per photon")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "zernike_crb_axial.png", dpi=120)
print("figures in", OUT.resolve())
