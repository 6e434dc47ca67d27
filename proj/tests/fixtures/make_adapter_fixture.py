"""Regenerates adapter_weights.json and adapter_parity.csv.

The forward pass here is an independent PyTorch implementation of the
adapter network; the C++ inference must reproduce its outputs.

    python3 make_adapter_fixture.py
"""
import csv
import json
import pathlib

import torch

WINDOW = 23
HERE = pathlib.Path(__file__).resolve().parent


class Adapter(torch.nn.Module):
    def __init__(self):
        super().__init__()
        self.conv1 = torch.nn.Conv1d(6, 32, kernel_size=6, dilation=2)
        self.conv2 = torch.nn.Conv1d(32, 32, kernel_size=5, dilation=3)
        self.fc = torch.nn.Linear(32, 3)

    def forward(self, x, mean, std):
        x = (x - mean[None, :, None]) / std[None, :, None]
        h = torch.relu(self.conv1(x))
        h = torch.relu(self.conv2(h))
        return 3.0 * torch.tanh(self.fc(h[:, :, -1]))


def main():
    torch.manual_seed(20240611)
    model = Adapter().double()
    mean = torch.tensor([0.01, -0.02, 0.03, 0.1, -0.05, 0.2], dtype=torch.float64)
    std = torch.tensor([0.5, 0.4, 0.6, 1.5, 1.2, 2.0], dtype=torch.float64)

    doc = {
        "format_version": 1,
        "activation": "relu",
        "window": WINDOW,
        "norm_mean": mean.tolist(),
        "norm_std": std.tolist(),
        "conv1": {"weight": model.conv1.weight.tolist(), "bias": model.conv1.bias.tolist()},
        "conv2": {"weight": model.conv2.weight.tolist(), "bias": model.conv2.bias.tolist()},
        "fc": {"weight": model.fc.weight.tolist(), "bias": model.fc.bias.tolist()},
        "sigma0": [3.0, 2.0, 0.2],
    }
    # json writes the shortest repr, which round-trips doubles exactly
    (HERE / "adapter_weights.json").write_text(json.dumps(doc, indent=1) + "\n")

    windows = torch.randn(16, 6, WINDOW, dtype=torch.float64) * std[None, :, None] + mean[None, :, None]
    with torch.no_grad():
        z = model(windows, mean, std)

    header = ["z_fw", "z_lat", "z_up"] + [f"x{c}_{t}" for c in range(6) for t in range(WINDOW)]
    with open(HERE / "adapter_parity.csv", "w", newline="") as f:
        out = csv.writer(f)
        out.writerow(header)
        for k in range(windows.shape[0]):
            out.writerow([repr(v) for v in z[k].tolist()] + [repr(v) for v in windows[k].flatten().tolist()])


if __name__ == "__main__":
    main()
