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
"""Golden logits and input gradients of the three detectors.

Weights and inputs come from hashed_init, which nn::fill_deterministic and
nn::hashed_uniform reproduce bit for bit.
"""

import json
import os

import numpy as np
import torch

from hashed_init import fill_module, hashed_uniform
from reference_models import LCNN, MesoInception4, SpecRNet

OUT = os.path.join(os.path.dirname(__file__), "..", "models")
SEED = 77
CASES = {
    "lcnn": (lambda: LCNN(80), 80, 64),
    "specrnet": (lambda: SpecRNet(), 64, 72),
    "mesonet": (lambda: MesoInception4(), 64, 96),
}


def no_dropout(model):
    for m in model.modules():
        if isinstance(m, torch.nn.Dropout):
            m.p = 0.0


def main():
    torch.set_default_dtype(torch.float64)
    os.makedirs(OUT, exist_ok=True)
    for name, (make, rows, frames) in CASES.items():
        model = make()
        fill_module(model, SEED)
        shape = (2, rows, frames)
        x = hashed_uniform(SEED, "input." + name, int(np.prod(shape)), -1.0, 1.0).reshape(shape)
        out = {"seed": SEED, "shape": list(shape)}
        model.eval()
        xt = torch.tensor(x, requires_grad=True)
        logits = model(xt.unsqueeze(1))
        logits.sum().backward()
        out["eval_logits"] = logits.detach().tolist()
        g = xt.grad.numpy().ravel()
        idx = np.linspace(0, g.size - 1, 64).astype(int)
        out["grad_index"] = idx.tolist()
        out["grad_values"] = g[idx].tolist()
        out["grad_abs_sum"] = float(np.abs(g).sum())
        model.train()
        no_dropout(model)
        with torch.no_grad():
            out["train_logits"] = model(torch.tensor(x).unsqueeze(1)).tolist()
        with open(os.path.join(OUT, name + "_golden.json"), "w") as f:
            json.dump(out, f)


if __name__ == "__main__":
    main()
