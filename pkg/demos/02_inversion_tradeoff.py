# %% [markdown]
# # Space against time for inverting one function
#
# A random f on N = 2^16 points.  Raising the evaluation budget T shortens
# the tables.  The random-function preset uses longer chains (t ~ sqrt T
# rather than cbrt T) and no heavy table, so it stores fewer words.

# %%
import numpy as np

from ksumindex.inverter import InversionParams, Mode, TableFunction, build

N = 1 << 16
f = TableFunction(np.random.default_rng(1).integers(0, N, size=N))
targets = np.random.default_rng(2).integers(0, N, size=2000)
targets = np.asarray(f(targets))  # images only, so every target has a preimage

# %%
print(f"{'mode':8} {'T':>5} {'t':>3} {'r':>4} {'words':>8} {'hit':>6} {'steps':>7}")
for mode in Mode:
    for T in (16, 64, 256):
        p = InversionParams.for_budget(N, T, mode)
        inv = build(f, p, seed=3)
        witness, steps = inv.invert_batch(f, targets)
        print(f"{mode.value:8} {T:5d} {p.t:3d} {p.r:4d} {inv.stored_words():8d} "
              f"{(witness >= 0).mean():6.2f} {steps.mean():7.1f}")

# %% [markdown]
# One table set finds roughly half the targets.  The index makes up the rest
# by building L of these over independently hashed functions and checking
# every sum during preprocessing.
