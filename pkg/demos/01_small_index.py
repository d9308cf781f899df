# %% [markdown]
# # A small index, end to end
#
# Two lists of 64 random elements, so 4096 pair sums.  We build the index,
# ask about a few sums and a few non-sums, and look at what it costs.

# %%
import numpy as np

from ksumindex import Instance, enumerate_sumset, preprocess

rng = np.random.default_rng(0)
inst = Instance.random(64, 3, rng)
idx = preprocess(inst, delta=0.75, mode="general", seed=0)
print("hash functions:", idx.L, " retries:", idx.stats.retries)
print("stored words:", idx.space_words(), " vs n^2 =", inst.n ** 2)

# %%
sums = enumerate_sumset(inst)
print(len(sums), "distinct sums")
for z in sums.sums[:3].tolist():
    res = idx.query(z)
    print(z, "->", res.witness, "steps", res.steps)

# %% a value that is not a sum
c = 12345
print(c, "->", idx.query(c))

# %% [markdown]
# Every "yes" carries a witness, and the witness is checked before it is
# returned, so a broken table can lose answers but never invent one.

# %%
found, witness, steps = idx.query_batch(sums.sums)
print("all sums found:", found.all(), " mean steps", steps.mean().round(1))
