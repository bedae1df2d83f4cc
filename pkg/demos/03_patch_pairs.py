"""
From an image pair to a labeling session
========================================

Fabricates a co-registered before/after image pair with a planted
change, tiles it into patch pairs, saves the dataset to disk the way
the service expects it, and plays a couple of interactive rounds with
a scripted stand-in for the human.
"""

import tempfile

import numpy as np

from frugalcd import (Hyperparams, PatchGrid, Strategy, extract_patch_pairs,
                      init_session, load_dataset, save_dataset,
                      submit_labels)

rng = np.random.default_rng(7)

# A 150 x 240 scene: 5 x 8 grid of 30-pixel patches. The "after" image
# is the "before" image plus noise, except one block where something
# appeared.
before = rng.integers(60, 196, size=(150, 240, 3), dtype=np.uint8)
after = np.clip(before.astype(np.int16)
                + rng.integers(-10, 11, size=before.shape), 0, 255
                ).astype(np.uint8)
after[60:90, 120:150] = 230  # the planted change, patch r002c004

dataset, patches = extract_patch_pairs(before, after, PatchGrid(30, 30),
                                       feature_mode="absdiff")
print(f"{dataset.n} patch pairs, {dataset.d} features each")

# Round-trip through the on-disk layout; the PNGs under patches/ are
# what the annotation UI shows.
with tempfile.TemporaryDirectory() as tmp:
    save_dataset(tmp, dataset, patches=patches,
                 metadata={"scene": "fabricated demo"})
    dataset, _, meta = load_dataset(tmp)
    print("reloaded:", meta["scene"], "with patch files:",
          dataset.patch_refs is not None)

# The scripted oracle: a pair changed if its mean absolute difference
# is large. Exactly what the planted block produces.
truth = np.where(dataset.features.mean(axis=1) > 0.1, 1, -1)
print("changed patches:", [dataset.ids[i]
                           for i in np.flatnonzero(truth == 1)])

hp = Hyperparams(n_clusters=4, display_size=6, n_rounds=3, svm_epochs=50)
state = init_session(dataset, hp, Strategy.PROPOSED)
while not state.finished:
    shown = [dataset.ids[i] for i in state.pending]
    answers = {i: int(truth[i]) for i in state.pending}
    state = submit_labels(state, answers)
    print(f"round {state.t}: labeled {shown}")

scores = state.model.weights @ dataset.features.T + state.model.bias
top = int(np.argmax(scores))
print("highest-scoring patch after the session:", dataset.ids[top])
