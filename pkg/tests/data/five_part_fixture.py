# Demo file for segmentation checks.
# One documented walker function.

import os
import sys

MAX_DEPTH = 3


def walk_tree(root, depth=0):
    """Walk a directory tree up to MAX_DEPTH levels."""
    entries = []
    # guard against runaway recursion
    if depth > MAX_DEPTH:
        return entries
    for name in sorted(os.listdir(root)):
        path = os.path.join(root, name)
        entries.append(path)
        if os.path.isdir(path):
            entries.extend(walk_tree(path, depth + 1))
    return entries
