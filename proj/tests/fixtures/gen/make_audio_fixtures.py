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
"""Writes the small container fixtures used by the audio loader tests."""

import json
import os

import numpy as np
import soundfile as sf

OUT = os.path.join(os.path.dirname(__file__), "..", "audio")


def main():
    os.makedirs(OUT, exist_ok=True)
    # 1 s of stereo silence at 48 kHz.
    sf.write(os.path.join(OUT, "silence_48k_stereo.flac"), np.zeros((48000, 2), np.int16),
             48000, subtype="PCM_16")
    # Short stereo ramp with known integer values; the second channel negated.
    n = 800
    ramp = (np.arange(n, dtype=np.int64) * 81 - 32768).clip(-32768, 32767).astype(np.int16)
    stereo = np.stack([ramp, (-ramp.astype(np.int32)).clip(-32768, 32767).astype(np.int16)], 1)
    sf.write(os.path.join(OUT, "ramp_16k_stereo.flac"), stereo, 16000, subtype="PCM_16")
    sf.write(os.path.join(OUT, "ramp_16k_stereo.wav"), stereo, 16000, subtype="PCM_16")
    # 24-bit and 8-bit PCM plus float, mono, 0.05 s at 22.05 kHz.
    t = np.arange(1102) / 22050.0
    x = 0.5 * np.sin(2 * np.pi * 440 * t)
    sf.write(os.path.join(OUT, "sine_pcm24.wav"), x, 22050, subtype="PCM_24")
    sf.write(os.path.join(OUT, "sine_pcm24.flac"), x, 22050, subtype="PCM_24")
    sf.write(os.path.join(OUT, "sine_u8.wav"), x, 22050, subtype="PCM_U8")
    sf.write(os.path.join(OUT, "sine_float.wav"), x.astype(np.float32), 22050, subtype="FLOAT")
    with open(os.path.join(OUT, "corrupt.wav"), "wb") as f:
        f.write(b"RIFF\x10\x00\x00\x00WAVEjunkjunkjunk")
    with open(os.path.join(OUT, "expected.json"), "w") as f:
        json.dump({"ramp_left_first": int(ramp[0]), "ramp_left_last": int(ramp[-1]),
                   "ramp_len": n, "sine_len": int(len(x)),
                   "sine_head": [float(v) for v in x[:16]]}, f, indent=1)


if __name__ == "__main__":
    main()
