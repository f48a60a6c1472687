"""CSV and JSON formats for datasets and results (all node indices 1-based)."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from .model import CovariatePanel, GroupedParameters, TensorSeries
from .networks import GroupAssignment, NetworkLayer, read_edge_csv, write_edge_csv

MANIFEST_FORMAT = "gtnar-dataset"


def _read_header(path: Path) -> list[str]:
    with path.open() as fh:
        return [h.strip() for h in fh.readline().strip().split(",")]


def write_series_csv(series: TensorSeries, path) -> None:
    """Rows ``i1,...,iq,t,y`` with t outermost and cells in first-index-fastest order."""
    y = series.values
    dims = series.dims
    q = len(dims)
    cells = np.array(np.unravel_index(np.arange(int(np.prod(dims))), dims, order="F")).T + 1
    header = ",".join([f"i{l + 1}" for l in range(q)] + ["t", "y"])
    with Path(path).open("w") as fh:
        fh.write(header + "\n")
        for t in range(y.shape[0]):
            vals = y[t].ravel(order="F")
            lines = [
                ",".join(map(str, c)) + f",{t},{v!r}" for c, v in zip(cells.tolist(), vals.tolist())
            ]
            fh.write("\n".join(lines) + "\n")


def read_series_csv(path, dims=None) -> TensorSeries:
    path = Path(path)
    header = _read_header(path)
    q = len(header) - 2
    expected = [f"i{l + 1}" for l in range(q)] + ["t", "y"]
    if q < 1 or header != expected:
        raise ValueError(f"{path}: expected header {','.join(expected)}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    idx = data[:, :q].astype(np.int64) - 1
    t = data[:, q].astype(np.int64)
    if dims is None:
        dims = tuple(int(i) for i in idx.max(axis=0) + 1)
    n_snap = int(t.max()) + 1
    if idx.min() < 0 or np.any(idx >= np.asarray(dims)) or t.min() < 0:
        raise ValueError(f"{path}: index out of range")
    y = np.full((n_snap, *dims), np.nan)
    y[(t, *idx.T)] = data[:, q + 1]
    if np.isnan(y).any():
        raise ValueError(f"{path}: series is incomplete (expected {n_snap} x {dims} values)")
    return TensorSeries(y)


def write_covariate_csv(values: np.ndarray, path) -> None:
    """Rows ``node,t,c1..cp`` for t = 1..T."""
    n_times, n, p = values.shape
    header = ",".join(["node", "t"] + [f"c{j + 1}" for j in range(p)])
    with Path(path).open("w") as fh:
        fh.write(header + "\n")
        for t in range(n_times):
            for i in range(n):
                fh.write(",".join([str(i + 1), str(t + 1)] + [repr(v) for v in values[t, i].tolist()]) + "\n")


def read_covariate_csv(path, n, n_times) -> np.ndarray:
    path = Path(path)
    header = _read_header(path)
    if header[:2] != ["node", "t"] or header[2:] != [f"c{j + 1}" for j in range(len(header) - 2)]:
        raise ValueError(f"{path}: expected header node,t,c1..cp")
    p = len(header) - 2
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2).reshape(-1, p + 2)
    out = np.full((n_times, n, p), np.nan)
    node = data[:, 0].astype(np.int64) - 1
    t = data[:, 1].astype(np.int64) - 1
    if data.shape[0] != n * n_times or node.min(initial=0) < 0 or node.max(initial=0) >= n or t.min(initial=0) < 0 or t.max(initial=0) >= n_times:
        raise ValueError(f"{path}: expected {n * n_times} rows covering nodes 1..{n}, t 1..{n_times}")
    out[t, node] = data[:, 2:]
    if np.isnan(out).any():
        raise ValueError(f"{path}: missing covariate rows")
    return out


def write_memberships_csv(mem: GroupAssignment, path) -> None:
    with Path(path).open("w") as fh:
        fh.write("node,group\n")
        for i, g in enumerate(mem.labels.tolist()):
            fh.write(f"{i + 1},{g + 1}\n")


def read_memberships_csv(path, n_groups=None) -> GroupAssignment:
    path = Path(path)
    if _read_header(path) != ["node", "group"]:
        raise ValueError(f"{path}: expected header node,group")
    data = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
    labels = np.empty(data.shape[0], dtype=np.int64)
    labels[data[:, 0] - 1] = data[:, 1] - 1
    return GroupAssignment(labels, n_groups or 0)


def params_to_dict(params: GroupedParameters) -> dict:
    return {
        "lambda": [v.tolist() for v in params.lambdas],
        "zeta": [z.tolist() for z in params.zetas],
        "alpha": params.alpha.tolist(),
        "noise_sd": float(params.noise_sd),
    }


def params_from_dict(d: dict) -> GroupedParameters:
    lambdas = [np.asarray(v, dtype=float) for v in d["lambda"]]
    zetas = [np.asarray(z, dtype=float).reshape(len(lam), -1) for z, lam in zip(d["zeta"], lambdas)]
    return GroupedParameters(lambdas, zetas, np.asarray(d["alpha"], dtype=float), float(d.get("noise_sd", 1.0)))


def read_params_json(path) -> GroupedParameters:
    with Path(path).open() as fh:
        return params_from_dict(json.load(fh))


def dump_json(obj, path) -> None:
    with Path(path).open("w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def load_schema(name: str) -> dict:
    text = resources.files("gtnar").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate_json(obj, name: str) -> None:
    import jsonschema

    jsonschema.validate(obj, load_schema(name))


class Dataset:
    """In-memory view of a manifest bundle."""

    def __init__(self, series, networks, covariates, memberships=None, params=None, manifest=None):
        self.series = series
        self.networks = networks
        self.covariates = covariates
        self.memberships = memberships
        self.params = params
        self.manifest = manifest or {}

    @property
    def has_truth(self) -> bool:
        return self.memberships is not None and self.params is not None


def write_dataset(out_dir, series, networks, covariates, memberships=None, params=None, metadata=None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    q = len(networks)
    manifest = {
        "format": MANIFEST_FORMAT,
        "version": 1,
        "dims": [int(n) for n in series.dims],
        "n_times": int(series.n_times),
        "networks": [],
        "covariates": [],
        "series": "series.csv",
        "metadata": metadata or {},
    }
    for l in range(q):
        name = f"network_{l + 1}.csv"
        write_edge_csv(networks[l], out / name)
        manifest["networks"].append({"path": name, "size": int(networks[l].size)})
        cname = f"covariates_{l + 1}.csv"
        write_covariate_csv(covariates.values[l], out / cname)
        manifest["covariates"].append(
            {"path": cname, "p": int(covariates.n_covariates[l]), "intercept": bool(covariates.intercept[l])}
        )
    write_series_csv(series, out / "series.csv")
    if memberships is not None and params is not None:
        names = []
        for l, mem in enumerate(memberships):
            name = f"memberships_{l + 1}.csv"
            write_memberships_csv(mem, out / name)
            names.append(name)
        dump_json(params_to_dict(params), out / "parameters.json")
        manifest["truth"] = {
            "memberships": names,
            "n_groups": [int(m.n_groups) for m in memberships],
            "parameters": "parameters.json",
        }
    validate_json(manifest, "manifest")
    dump_json(manifest, out / "manifest.json")
    return out / "manifest.json"


def read_dataset(manifest_path) -> Dataset:
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise FileNotFoundError(f"manifest not found: {manifest_path}")
    with manifest_path.open() as fh:
        manifest = json.load(fh)
    validate_json(manifest, "manifest")
    root = manifest_path.parent

    def resolve(name):
        p = root / name
        if not p.is_file():
            raise FileNotFoundError(f"referenced file not found: {p}")
        return p

    dims = tuple(manifest["dims"])
    n_times = int(manifest["n_times"])
    series = read_series_csv(resolve(manifest["series"]), dims)
    if series.n_times != n_times:
        raise ValueError(f"series has {series.n_times} transitions, manifest says {n_times}")
    networks: list[NetworkLayer] = [
        read_edge_csv(resolve(net["path"]), n=int(net["size"])) for net in manifest["networks"]
    ]
    cov = CovariatePanel(
        [read_covariate_csv(resolve(c["path"]), dims[l], n_times) for l, c in enumerate(manifest["covariates"])],
        tuple(bool(c.get("intercept", False)) for c in manifest["covariates"]),
    )
    memberships = params = None
    truth = manifest.get("truth")
    if truth:
        memberships = [
            read_memberships_csv(resolve(name), g) for name, g in zip(truth["memberships"], truth["n_groups"])
        ]
        params = read_params_json(resolve(truth["parameters"]))
    return Dataset(series, networks, cov, memberships, params, manifest)
