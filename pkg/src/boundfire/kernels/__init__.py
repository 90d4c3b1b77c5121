"""Compiled kernels (numba, or plain numpy when BOUNDFIRE_PURE_NUMPY=1)."""
