# %% [markdown]
# # How space and query work grow with n
#
# A short grid (one seed, n up to 512) of the experiment the
# `ksumindex bench-scaling` command runs.  Slopes are least-squares fits in
# log-log space; words and steps are counts, not timings.

# %%
from ksumindex.bench import run_scaling, space_ratio

grid = [64, 128, 256, 512]
reports = {mode: run_scaling(3, 0.75, mode, grid, seeds=[0], queries=500)
           for mode in ("general", "random")}

# %%
for mode, rep in reports.items():
    print(mode)
    for row in rep.rows:
        print(f"  n={row.n:4d} L={row.L:2d} words={row.stored_words:9d} "
              f"words/n^2={space_ratio(row):5.2f} mean steps={row.mean_query_steps:7.1f}")
    print(f"  space slope {rep.fitted_space_slope:.3f}  steps slope {rep.fitted_steps_slope:.3f}")

# %% [markdown]
# Both space slopes sit below 2.  The random preset stores two to three times
# fewer words, though on four points its slope is no flatter.  words/n^2 stays
# above 1 here because the L = O(log n) copies and the integer chain length
# dominate at these sizes.
