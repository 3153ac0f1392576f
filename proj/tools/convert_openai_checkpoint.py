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
"""PyTorch reference detectors used only to generate golden fixtures."""
"""Convert an openai-whisper PyTorch checkpoint (e.g. tiny.en.pt) into the
ggml container read by dfw (encoder tensors only, no vocabulary).

    python3 tools/convert_openai_checkpoint.py tiny.en.pt ggml-tiny.en.bin [--f16]

The ggml files published for whisper.cpp load directly as well; this tool
is for users who only have the PyTorch weights.
"""

import argparse
import hashlib
import struct

import numpy as np
import torch

MAGIC = 0x67676D6C


def mel_filters(n_mels):
    try:
        from whisper.audio import mel_filters as whisper_filters
        return whisper_filters("cpu", n_mels).numpy().astype(np.float32)
    except Exception:  # filters are informational; dfw recomputes them
        return np.zeros((n_mels, 201), dtype=np.float32)


def convert(src, dst, f16):
    ckpt = torch.load(src, map_location="cpu")
    dims = ckpt["dims"]
    state = ckpt["model_state_dict"]
    with open(dst, "wb") as out:
        w = lambda v: out.write(struct.pack("<i", int(v)))
        w(MAGIC)
        for key in ("n_vocab", "n_audio_ctx", "n_audio_state", "n_audio_head", "n_audio_layer",
                    "n_text_ctx", "n_text_state", "n_text_head", "n_text_layer", "n_mels"):
            w(dims[key])
        w(1 if f16 else 0)
        filters = mel_filters(dims["n_mels"])
        w(filters.shape[0])
        w(filters.shape[1])
        out.write(filters.tobytes())
        w(0)  # vocabulary omitted
        for name, t in state.items():
            if not name.startswith("encoder."):
                continue
            data = t.float().numpy()
            if name.endswith("conv1.bias") or name.endswith("conv2.bias"):
                data = data.reshape(-1, 1)
            half = f16 and data.ndim >= 2 and not name.endswith("positional_embedding")
            data = data.astype(np.float16 if half else np.float32)
            raw = name.encode()
            w(data.ndim)
            w(len(raw))
            w(1 if half else 0)
            for d in reversed(data.shape):
                w(d)
            out.write(raw)
            out.write(np.ascontiguousarray(data).tobytes())
    with open(dst, "rb") as f:
        return hashlib.sha256(f.read()).hexdigest()


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("src")
    ap.add_argument("dst")
    ap.add_argument("--f16", action="store_true", help="store matrices as float16")
    args = ap.parse_args()
    print(convert(args.src, args.dst, args.f16))


if __name__ == "__main__":
    main()
