# Copyright 2026  The dfwhisper Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Name-keyed deterministic weights, bit-compatible with nn::hashed_uniform."""

import numpy as np

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def fnv1a64(text):
    h = 0xCBF29CE484222325
    for c in text.encode():
        h ^= c
        h = (h * 0x100000001B3) & MASK
    return h


def _mix(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def derive_seed(seed, label):
    return _mix((seed + GOLDEN * (fnv1a64(label) | 1)) & MASK)


def hashed_uniform(seed, name, n, lo, hi):
    state = derive_seed(seed, name)
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        state = (state + GOLDEN) & MASK
        u = (_mix(state) >> 11) * 2.0 ** -53
        out[i] = lo + (hi - lo) * u
    return out


def fill_module(module, seed):
    """Mirror of nn::fill_deterministic for a torch module (params + buffers)."""
    import torch

    with torch.no_grad():
        for name, t in list(module.named_parameters()) + list(module.named_buffers()):
            if name.endswith("num_batches_tracked"):
                continue
            n = t.numel()
            if name.endswith("running_var"):
                v = hashed_uniform(seed, name, n, 0.5, 1.5)
            elif t.dim() >= 2:
                b = 1.0 / np.sqrt(n // t.shape[0])
                v = hashed_uniform(seed, name, n, -b, b)
            else:
                v = hashed_uniform(seed, name, n, -0.1, 0.1)
            t.copy_(torch.from_numpy(v).reshape(t.shape).to(t.dtype))


def encoder_init(module, seed):
    """Mirror of whisper::init_random_encoder: LayerNorm gains near one."""
    import torch

    with torch.no_grad():
        for name, t in module.named_parameters():
            full = "encoder." + name
            n = t.numel()
            if t.dim() == 1 and name.endswith(".weight"):
                v = 1.0 + hashed_uniform(seed, full, n, -0.1, 0.1)
            elif t.dim() >= 2:
                b = (np.sqrt(6.0) if name.startswith("conv") else 1.0) / np.sqrt(n // t.shape[0])
                v = hashed_uniform(seed, full, n, -b, b)
            else:
                v = hashed_uniform(seed, full, n, -0.1, 0.1)
            t.copy_(torch.from_numpy(v).reshape(t.shape).to(t.dtype))
