#!/usr/bin/env python3
"""Train a LeNet5 on an MNIST subset and write the simulator fixtures.

Outputs (formats documented in README.md):
  lenet5.dcam          model container
  mnist1k.dcds         held-out test samples
  mnist_calib.dcds     calibration samples for hash-length tuning
  lenet5.sidecar.json  float64 reference Top-1 on the exported samples

The MNIST source is the 5000-sample CSV bundled with mlxtend
(mlxtend/data/data/mnist_5k.csv.gz): 784 pixel columns then the label.
"""

import argparse
import gzip
import json
import math
import struct
import sys

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

KIND_CONV2D = 1
KIND_LINEAR = 2
KIND_MAXPOOL = 4

FLAG_BIAS = 1
FLAG_RELU = 2


class LeNet5(nn.Module):
    def __init__(self, dropout=0.0, noise_sigma=0.0, sim_hash=()):
        super().__init__()
        self.dropout = dropout
        self.noise_sigma = noise_sigma
        self.sim_hash = tuple(sim_hash)
        self.conv1 = nn.Conv2d(1, 6, 5, padding=2)
        self.conv2 = nn.Conv2d(6, 16, 5)
        self.fc1 = nn.Linear(400, 120)
        self.fc2 = nn.Linear(120, 84)
        self.fc3 = nn.Linear(84, 10)

    def _noise(self, out, x, layer):
        if not self.training or (self.noise_sigma == 0.0 and not self.sim_hash):
            return out
        w = layer.weight.flatten(1).norm(dim=1)
        if out.dim() == 4:
            k = layer.kernel_size
            xn = F.unfold(x, k, padding=layer.padding).norm(dim=1)
            xn = xn.view(out.shape[0], 1, out.shape[2], out.shape[3])
            wn = w.view(1, -1, 1, 1)
        else:
            xn = x.norm(dim=1, keepdim=True)
            wn = w.view(1, -1)
        scale = xn * wn
        if self.sim_hash:
            w2 = layer.weight.detach().flatten(1)
            if out.dim() == 4:
                cols = F.unfold(x.detach(), layer.kernel_size, padding=layer.padding)
                vecs = cols.transpose(1, 2).reshape(-1, w2.shape[1])
                err = hashed_error(vecs, w2, self.sim_hash)
                err = err.view(out.shape[0], -1, out.shape[1]).transpose(1, 2).reshape(out.shape)
            else:
                err = hashed_error(x.detach(), w2, self.sim_hash)
            out = out + scale * err
        if self.noise_sigma:
            out = out + self.noise_sigma * scale * torch.randn_like(out)
        return out

    def forward(self, x):
        x = F.max_pool2d(F.relu(self._noise(self.conv1(x), x, self.conv1)), 2)
        x = F.max_pool2d(F.relu(self._noise(self.conv2(x), x, self.conv2)), 2)
        x = torch.flatten(x, 1)
        x = F.dropout(x, self.dropout, self.training)
        x = F.relu(self._noise(self.fc1(x), x, self.fc1))
        x = F.dropout(x, self.dropout, self.training)
        x = F.relu(self._noise(self.fc2(x), x, self.fc2))
        return self._noise(self.fc3(x), x, self.fc3)


def e4m3(v):
    """Round non-negative values to the nearest E4M3 minifloat (saturating at 480)."""
    e = torch.floor(torch.log2(v.clamp_min(2.0 ** -9))).clamp(-6, 8)
    step = torch.exp2(e - 3)
    return (torch.round(v / step) * step).clamp_max(480.0)


def approx_cosine(theta):
    r = torch.where(theta > math.pi / 2, math.pi - theta, theta)
    c = torch.where(r <= math.pi / 3, 1.0 - r / math.pi, -0.96 * r + 1.51)
    return torch.where(theta > math.pi / 2, -c, c)


def hashed_error(vectors, weights, hash_lengths):
    """Relative error of the hashed dot product: one shared Gaussian
    projection per call, sign hashes, piecewise cosine of the hamming
    angle and minifloat norms, minus the exact cosine."""
    with torch.no_grad():
        k = hash_lengths[int(torch.randint(len(hash_lengths), (1,)))]
        proj = torch.randn(vectors.shape[1], k)
        sx = torch.where(vectors @ proj >= 0, 1.0, -1.0)
        sw = torch.where(weights @ proj >= 0, 1.0, -1.0)
        hd = (k - sx @ sw.T) / 2
        xn = vectors.norm(dim=1, keepdim=True)
        wn = weights.norm(dim=1).view(1, -1)
        scale = xn * wn
        exact = torch.where(scale > 0, (vectors @ weights.T) / scale.clamp_min(1e-30), torch.zeros_like(hd))
        ratio = torch.where(scale > 0, e4m3(xn) * e4m3(wn) / scale.clamp_min(1e-30), torch.zeros_like(hd))
        return ratio * approx_cosine(math.pi * hd / k) - exact


def random_shift(batch, gen, max_shift=2):
    """Translate each image by up to max_shift pixels (zero fill)."""
    padded = F.pad(batch, (max_shift,) * 4)
    out = torch.empty_like(batch)
    h, w = batch.shape[-2:]
    offs = torch.randint(0, 2 * max_shift + 1, (len(batch), 2), generator=gen)
    for i, (dy, dx) in enumerate(offs.tolist()):
        out[i] = padded[i, :, dy : dy + h, dx : dx + w]
    return out


def load_csv(path):
    with gzip.open(path, "rt") as fh:
        rows = np.loadtxt(fh, delimiter=",", dtype=np.int64)
    images = rows[:, :784].astype(np.float32) / 255.0
    labels = rows[:, 784].astype(np.int64)
    return images.reshape(-1, 1, 28, 28), labels


def f32(arr):
    return np.ascontiguousarray(arr, dtype="<f4").tobytes()


def write_model(path, model):
    sd = {k: v.detach().cpu().numpy() for k, v in model.state_dict().items()}
    out = bytearray(b"DCAM")
    out += struct.pack("<HH", 1, 7)
    out += struct.pack("<III", 1, 28, 28)

    def conv(name, stride, pad, relu):
        w = sd[name + ".weight"]
        k, c, r, s = w.shape
        flags = FLAG_BIAS | (FLAG_RELU if relu else 0)
        rec = struct.pack("<BB", KIND_CONV2D, flags)
        rec += struct.pack("<IIIIII", k, c, r, s, stride, pad)
        return rec + f32(w) + f32(sd[name + ".bias"])

    def linear(name, relu):
        w = sd[name + ".weight"]
        o, i = w.shape
        flags = FLAG_BIAS | (FLAG_RELU if relu else 0)
        rec = struct.pack("<BB", KIND_LINEAR, flags) + struct.pack("<II", i, o)
        return rec + f32(w) + f32(sd[name + ".bias"])

    def maxpool(window, stride):
        return struct.pack("<BBII", KIND_MAXPOOL, 0, window, stride)

    out += conv("conv1", 1, 2, True)
    out += maxpool(2, 2)
    out += conv("conv2", 1, 0, True)
    out += maxpool(2, 2)
    out += linear("fc1", True)
    out += linear("fc2", True)
    out += linear("fc3", False)
    with open(path, "wb") as fh:
        fh.write(out)


def write_dataset(path, images, labels, num_classes=10):
    n, c, h, w = images.shape
    out = bytearray(b"DCDS")
    out += struct.pack("<HHI", 1, num_classes, n)
    out += struct.pack("<III", c, h, w)
    out += f32(images)
    out += np.ascontiguousarray(labels, dtype="<u2").tobytes()
    with open(path, "wb") as fh:
        fh.write(out)


def reference_top1(model, images, labels):
    # float64 forward on the exported f32 weights
    m64 = LeNet5().double()
    m64.load_state_dict({k: v.double() for k, v in model.state_dict().items()})
    with torch.no_grad():
        logits = m64(torch.from_numpy(images).double())
    pred = logits.argmax(1).numpy()
    return int((pred == labels).sum())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mnist-csv", required=True)
    ap.add_argument("--out-dir", default=".")
    ap.add_argument("--epochs", type=int, default=40)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--test-size", type=int, default=1000)
    ap.add_argument("--calib-size", type=int, default=1000)
    ap.add_argument("--train-on-calib", action="store_true",
                    help="also train on the calibration samples")
    ap.add_argument("--dropout", type=float, default=0.2)
    ap.add_argument("--weight-decay", type=float, default=1e-4)
    ap.add_argument("--noise-sigma", type=float, default=0.0,
                    help="train-time dot-product noise, relative to |x||w|")
    ap.add_argument("--sim-hash", default="1024",
                    help="comma-separated hash lengths whose estimator error is simulated in training")
    args = ap.parse_args(argv)

    torch.manual_seed(args.seed)
    torch.use_deterministic_algorithms(True)
    torch.set_num_threads(1)
    rng = np.random.default_rng(args.seed)

    images, labels = load_csv(args.mnist_csv)
    order = rng.permutation(len(labels))
    images, labels = images[order], labels[order]
    test_x, test_y = images[: args.test_size], labels[: args.test_size]
    split = args.test_size + args.calib_size
    calib_x, calib_y = images[args.test_size : split], labels[args.test_size : split]
    first_train = args.test_size if args.train_on_calib else split
    train_x, train_y = images[first_train:], labels[first_train:]

    sim_hash = [int(k) for k in args.sim_hash.split(",") if k]
    model = LeNet5(dropout=args.dropout, noise_sigma=args.noise_sigma, sim_hash=sim_hash)
    opt = torch.optim.Adam(model.parameters(), lr=2e-3, weight_decay=args.weight_decay)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=args.epochs)
    tx, ty = torch.from_numpy(train_x), torch.from_numpy(train_y)
    gen = torch.Generator().manual_seed(args.seed)
    for epoch in range(args.epochs):
        model.train()
        perm = torch.randperm(len(ty), generator=gen)
        for start in range(0, len(ty), 64):
            idx = perm[start : start + 64]
            opt.zero_grad()
            loss = F.cross_entropy(model(random_shift(tx[idx], gen)), ty[idx])
            loss.backward()
            opt.step()
        sched.step()
        model.eval()
        correct = reference_top1(model, test_x, test_y)
        print(f"epoch {epoch + 1}: loss {loss.item():.4f} test top1 {correct / len(test_y):.4f}",
              file=sys.stderr)

    correct = reference_top1(model, test_x, test_y)
    write_model(f"{args.out_dir}/lenet5.dcam", model)
    write_dataset(f"{args.out_dir}/mnist1k.dcds", test_x, test_y)
    write_dataset(f"{args.out_dir}/mnist_calib.dcds", calib_x, calib_y)
    sidecar = {
        "architecture": "lenet5",
        "variant": "conv5x5/6 pad2 + relu, maxpool2, conv5x5/16 + relu, maxpool2, "
                   "fc120 + relu, fc84 + relu, fc10",
        "input": "28x28 grayscale scaled to [0,1]",
        "samples": int(len(test_y)),
        "correct": correct,
        "reference_top1": correct / len(test_y),
        "epochs": args.epochs,
        "seed": args.seed,
        "train_samples": int(len(train_y)),
        "calib_samples": int(len(calib_y)),
        "train_on_calib": args.train_on_calib,
        "dropout": args.dropout,
        "weight_decay": args.weight_decay,
        "noise_sigma": args.noise_sigma,
        "sim_hash": sim_hash,
    }
    with open(f"{args.out_dir}/lenet5.sidecar.json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(sidecar, indent=2), file=sys.stderr)


if __name__ == "__main__":
    main()
