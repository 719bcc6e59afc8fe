"""Text formats for quaternion matrices, models, topologies and checkpoints.

Matrix entries are written as four comma-separated reals ``r,i,j,k``, one
matrix row per line, under a header naming columns ``qn_{col}_{r|i|j|k}``
(``n`` stands for the row, which the line position gives).
Model files hold ``key = value`` lines followed by named matrix blocks
introduced by ``[name]``.
"""

import numpy as np

from .errors import DimensionError, StructureError
from .experiments.common import ConfigError, fmt, parse_config

_COMPONENTS = "rijk"


def _as_matrix(m):
    m = np.asarray(m, dtype=float)
    if m.ndim == 2 and m.shape[-1] == 4:
        m = m[:, None, :]
    if m.ndim != 3 or m.shape[-1] != 4:
        raise DimensionError(f"expected a quaternion vector or matrix, got shape {m.shape}")
    return m


def qmatrix_lines(m):
    """Header and row lines for a QMatrix (n, p, 4) or QVector (n, 4)."""
    m = _as_matrix(m)
    header = ",".join(f"qn_{c}_{x}" for c in range(m.shape[1]) for x in _COMPONENTS)
    lines = [header]
    for row in m:
        lines.append(",".join(fmt(v) for v in row.reshape(-1)))
    return lines


def parse_qmatrix(lines):
    """Inverse of :func:`qmatrix_lines`; returns an (n, p, 4) array."""
    lines = [l for l in lines if l.strip()]
    if not lines:
        raise StructureError("empty matrix block")
    cols = lines[0].split(",")
    if len(cols) % 4 or any(not c.startswith("q") for c in cols):
        raise StructureError("matrix header must list qn_{col}_{r|i|j|k} columns")
    p = len(cols) // 4
    rows = []
    for l in lines[1:]:
        vals = [float(v) for v in l.split(",")]
        if len(vals) != 4 * p:
            raise StructureError(f"matrix row has {len(vals)} values, expected {4 * p}")
        rows.append(np.array(vals).reshape(p, 4))
    return np.stack(rows) if rows else np.zeros((0, p, 4))


def write_qmatrix(path, m):
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(qmatrix_lines(m)) + "\n")


def read_qmatrix(path):
    with open(path) as fh:
        return parse_qmatrix(fh.read().splitlines())


def dump_model(scalars, matrices):
    """Model text: ``key = value`` lines then ``[name]`` matrix blocks."""
    out = [f"{k} = {v if isinstance(v, str) else fmt(v)}" for k, v in scalars.items()]
    for name, m in matrices.items():
        out.append(f"[{name}]")
        out.extend(qmatrix_lines(m))
    return "\n".join(out) + "\n"


def load_model(text):
    """Parse :func:`dump_model` output into (scalars dict of str, matrices dict)."""
    head, blocks, current = [], {}, None
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1]
            blocks[current] = []
        elif current is None:
            head.append(line)
        elif stripped and not stripped.startswith("#"):
            blocks[current].append(stripped)
    return parse_config("\n".join(head)), {k: parse_qmatrix(v) for k, v in blocks.items()}


def write_model(path, scalars, matrices):
    with open(path, "w", newline="\n") as fh:
        fh.write(dump_model(scalars, matrices))


def read_model(path):
    with open(path) as fh:
        return load_model(fh.read())


def dump_topology(network):
    lines = [f"agents {network.n_agents}"] + [f"edge {a} {b}" for a, b in network.edges]
    return "\n".join(lines) + "\n"


def load_topology(text):
    """Parse ``agents N`` / ``edge a b`` lines into an AgentNetwork."""
    from .fusion import AgentNetwork

    n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        try:
            if parts[0] == "agents" and len(parts) == 2:
                n = int(parts[1])
            elif parts[0] == "edge" and len(parts) == 3:
                edges.append((int(parts[1]), int(parts[2])))
            else:
                raise ValueError(raw)
        except ValueError as exc:
            raise ConfigError(f"topology line {lineno}: cannot parse {raw!r}") from exc
    if n is None:
        raise ConfigError("topology file lacks an 'agents N' line")
    return AgentNetwork.from_edges(n, edges)


def read_topology(path):
    with open(path) as fh:
        return load_topology(fh.read())


def dump_checkpoint(net):
    """QNN checkpoint: sizes, activation, seed and gamma, then W/b blocks per layer."""
    scalars = {"sizes": " ".join(str(s) for s in net.sizes), "activation": net.activation,
               "seed": net.seed, "gamma": net.gamma, "steps": net.steps}
    matrices = {}
    for idx, layer in enumerate(net.layers):
        matrices[f"W{idx}"] = layer.W
        matrices[f"b{idx}"] = layer.b
    return dump_model(scalars, matrices)


def load_checkpoint(text):
    from .qnn import Layer, QnnNetwork

    scalars, blocks = load_model(text)
    sizes = [int(s) for s in scalars["sizes"].split()]
    layers = []
    for idx in range(len(sizes) - 1):
        W = blocks[f"W{idx}"]
        b = blocks[f"b{idx}"][:, 0]
        if W.shape[:2] != (sizes[idx + 1], sizes[idx]):
            raise StructureError(f"layer {idx} weight shape {W.shape[:2]} disagrees with sizes")
        layers.append(Layer(W, b))
    return QnnNetwork(layers, scalars["activation"], float(scalars["gamma"]),
                      int(scalars["seed"]), int(scalars.get("steps", 0)))

