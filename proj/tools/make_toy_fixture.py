#!/usr/bin/env python3
"""Generate the toy fixtures under fixtures/.

toy_mlp.json     2 -> 32 -> 3 ReLU classifier with neuron slots "in" and "h1"
toy_train.csv    training / calibration split
toy_test.csv     held-out split
linear3.json     three-slot affine network with dyadic non-negative weights

Everything is seeded, so rerunning reproduces the committed files byte for byte.
"""

import argparse
import json
import pathlib

import numpy as np

CENTRES = np.array([[0.0, 2.0], [-1.7320508, -1.0], [1.7320508, -1.0]])
SIGMA = 0.45


def make_blobs(rng, n):
    labels = rng.integers(0, 3, size=n)
    pts = CENTRES[labels] + SIGMA * rng.standard_normal((n, 2))
    # rounding keeps the CSV compact and round-trips exactly through the text format
    return np.round(pts, 4), labels


def write_csv(path, pts, labels):
    with open(path, "w") as f:
        f.write("sample_id,x0,x1,label\n")
        for i, (p, y) in enumerate(zip(pts, labels)):
            f.write(f"s{i},{p[0]:.4f},{p[1]:.4f},{int(y)}\n")


def train_mlp(rng, x, y, hidden=32, steps=3000, lr=0.02):
    w1 = rng.standard_normal((hidden, 2)) * np.sqrt(2.0 / 2)
    b1 = np.zeros(hidden)
    w2 = rng.standard_normal((3, hidden)) * np.sqrt(2.0 / hidden)
    b2 = np.zeros(3)
    params = [w1, b1, w2, b2]
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    onehot = np.eye(3)[y]
    for t in range(1, steps + 1):
        h = x @ w1.T + b1
        a = np.maximum(h, 0.0)
        z = a @ w2.T + b2
        z -= z.max(axis=1, keepdims=True)
        p = np.exp(z)
        p /= p.sum(axis=1, keepdims=True)
        dz = (p - onehot) / len(x)
        gw2 = dz.T @ a
        gb2 = dz.sum(axis=0)
        da = dz @ w2
        dh = da * (h > 0)
        gw1 = dh.T @ x
        gb1 = dh.sum(axis=0)
        for i, g in enumerate([gw1, gb1, gw2, gb2]):
            m[i] = 0.9 * m[i] + 0.1 * g
            v[i] = 0.999 * v[i] + 0.001 * g * g
            mh = m[i] / (1 - 0.9**t)
            vh = v[i] / (1 - 0.999**t)
            params[i] -= lr * mh / (np.sqrt(vh) + 1e-8)
    return params


def predict(params, x):
    w1, b1, w2, b2 = params
    return np.argmax(np.maximum(x @ w1.T + b1, 0.0) @ w2.T + b2, axis=1)


def tensor(a):
    a = np.asarray(a, dtype=float)
    return {"shape": list(a.shape), "data": [float(v) for v in a.ravel()]}


def mlp_doc(params):
    w1, b1, w2, b2 = params
    return {
        "format": "spikeforge.network",
        "version": 1,
        "input_dim": 2,
        "layers": [
            {"kind": "neuron", "name": "in", "id": "in"},
            {"kind": "linear", "name": "fc1", "weight": tensor(w1), "bias": tensor(b1)},
            {"kind": "relu", "name": "relu1"},
            {"kind": "neuron", "name": "h1", "id": "h1"},
            {"kind": "linear", "name": "fc2", "weight": tensor(w2), "bias": tensor(b2)},
        ],
    }


def dyadic_layer(rng, out_dim, in_dim):
    # entries are multiples of 1/64; each row sums to at most 0.75 and the bias is at most 0.25
    w = rng.integers(0, 9, size=(out_dim, in_dim)).astype(float)
    for r in range(out_dim):
        while w[r].sum() > 48:
            c = rng.integers(0, in_dim)
            w[r, c] = max(0.0, w[r, c] - 1)
    b = rng.integers(0, 17, size=out_dim).astype(float)
    return w / 64.0, b / 64.0


def linear3_doc(rng):
    dims = [4, 6, 5, 3]
    layers = []
    for i in range(3):
        layers.append({"kind": "neuron", "name": f"s{i}", "id": f"s{i}"})
        w, b = dyadic_layer(rng, dims[i + 1], dims[i])
        layers.append({"kind": "linear", "name": f"fc{i + 1}", "weight": tensor(w), "bias": tensor(b)})
    return {"format": "spikeforge.network", "version": 1, "input_dim": dims[0], "layers": layers}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "fixtures"))
    ap.add_argument("--seed", type=int, default=20240611)
    ap.add_argument("--train", type=int, default=10000)
    ap.add_argument("--test", type=int, default=2000)
    args = ap.parse_args()

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)

    xtr, ytr = make_blobs(rng, args.train)
    xte, yte = make_blobs(rng, args.test)
    params = train_mlp(rng, xtr, ytr)
    acc_tr = (predict(params, xtr) == ytr).mean()
    acc_te = (predict(params, xte) == yte).mean()

    write_csv(out / "toy_train.csv", xtr, ytr)
    write_csv(out / "toy_test.csv", xte, yte)
    (out / "toy_mlp.json").write_text(json.dumps(mlp_doc(params), indent=1) + "\n")
    (out / "linear3.json").write_text(json.dumps(linear3_doc(rng), indent=1) + "\n")
    print(f"train accuracy {acc_tr:.4f}  test accuracy {acc_te:.4f}")


if __name__ == "__main__":
    main()
