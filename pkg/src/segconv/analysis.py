"""Multiply/add and memory accounting for naive and fused transpose convolution.

Every output element is a dot product of length L, costing L multiplications
and L - 1 additions, so ``adds = mults - output_elements`` for both methods.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass

from .reference import geometry
from .segregation import active_taps

__all__ = [
    "GAN_LAYERS",
    "LayerShape",
    "OpCounts",
    "PRINTED_TABLE4",
    "Table4Report",
    "count_ops_fused",
    "count_ops_naive",
    "memory_saved_bytes",
    "table4_report",
]


@dataclass(frozen=True)
class OpCounts:
    mults: int
    adds: int

    def __sub__(self, other):
        return OpCounts(self.mults - other.mults, self.adds - other.adds)

    def __add__(self, other):
        return OpCounts(self.mults + other.mults, self.adds + other.adds)


@dataclass(frozen=True)
class LayerShape:
    n_in: int
    cin: int
    cout: int
    kh: int
    kw: int
    p_orig: int

    @property
    def geometry(self):
        return geometry(self.n_in, self.kh, self.kw, self.p_orig)

    @property
    def input_shape(self):
        return f"{self.n_in}x{self.n_in}x{self.cin}"

    @property
    def kernel_shape(self):
        return f"{self.kh}x{self.kw}x{self.cin}x{self.cout}"


def _out_elements(shape):
    g = shape.geometry
    return g.out_h * g.out_w * shape.cout


def count_ops_naive(shape):
    """Operations of upsample-pad-convolve, multiplications by inserted zeros included."""
    g = shape.geometry
    mults = g.out_h * g.out_w * shape.cout * shape.kh * shape.kw * shape.cin
    return OpCounts(mults, mults - _out_elements(shape))


def _active_tap_total(out_len, k_size, p_orig):
    # sum over output positions along one axis of the taps that meet real input
    total = 0
    for parity in (0, 1):
        positions = (out_len - parity + 1) // 2
        total += positions * len(active_taps(k_size, parity, p_orig)[0])
    return total


def count_ops_fused(shape):
    """Operations of the segregated path, counted per output position.

    The active-tap count factorises over rows and columns, so the sum over all
    positions is a product of two one-axis sums.
    """
    g = shape.geometry
    rows = _active_tap_total(g.out_h, shape.kh, shape.p_orig)
    cols = _active_tap_total(g.out_w, shape.kw, shape.p_orig)
    mults = rows * cols * shape.cin * shape.cout
    return OpCounts(mults, mults - _out_elements(shape))


def memory_saved_bytes(shape, elem_bytes=4):
    """Bytes of the padded upsampled input that the fused path never allocates,
    net of the smaller padded input it does allocate.
    """
    g = shape.geometry
    big = (2 * shape.n_in - 1 + 2 * shape.p_orig) ** 2
    small = (shape.n_in + 2 * g.p_fused) ** 2
    return elem_bytes * shape.cin * (big - small)


def _gan(n_in, cin, cout):
    return LayerShape(n_in=n_in, cin=cin, cout=cout, kh=4, kw=4, p_orig=2)


# (model, layer) -> shape; 4x4 kernels with P=2 double the spatial size
GAN_LAYERS = {
    "DCGAN": {
        2: _gan(4, 1024, 512),
        3: _gan(8, 512, 256),
        4: _gan(16, 256, 128),
        5: _gan(32, 128, 3),
    },
    "Art-GAN": {
        2: _gan(4, 512, 256),
        3: _gan(8, 256, 128),
        4: _gan(16, 128, 128),
        6: _gan(32, 128, 3),
    },
    "GP-GAN": {
        2: _gan(4, 512, 256),
        3: _gan(8, 256, 128),
        4: _gan(16, 128, 64),
        5: _gan(32, 64, 3),
    },
    "EB-GAN": {
        2: _gan(4, 2048, 1024),
        3: _gan(8, 1024, 512),
        4: _gan(16, 512, 256),
        5: _gan(32, 256, 128),
        6: _gan(64, 128, 64),
        7: _gan(128, 64, 64),
    },
}

# Published figures, verbatim: (mults naive, mults fused, adds naive, adds fused).
# "total" rows add (reduction mults, reduction adds).
PRINTED_TABLE4 = {
    ("DCGAN", 2): ("536,870,912", "134,217,728", "536,838,144", "134,184,960"),
    ("DCGAN", 3): ("536,870,912", "134,217,728", "536,805,376", "134,152,192"),
    ("DCGAN", 4): ("536,870,912", "134,217,728", "536,739,840", "134,086,656"),
    ("DCGAN", 5): ("25,165,824", "6,291,456", "25,153,536", "6,279,168"),
    ("DCGAN", "total"): (
        "1,635,778,560", "408,944,640", "1,635,536,896", "408,702,976",
        "1,226,833,920", "1,226,833,920",
    ),
    ("Art-GAN", 2): ("134,217,728", "33,554,432", "134,201,344", "33,538,048"),
    ("Art-GAN", 3): ("134,217,728", "33,554,432", "134,184,960", "33,521,664"),
    ("Art-GAN", 4): ("268,435,456", "67,108,864", "268,304,384", "66,977,792"),
    ("Art-GAN", 6): ("25,165,824", "6,2914,56", "25,153,536", "6,279,168"),
    ("Art-GAN", "total"): (
        "562,036,736", "140,509,184", "561,844,224", "140,316,672",
        "421,527,552", "421,527,552",
    ),
    ("GP-GAN", 2): ("134,217,728", "33,554,432", "134,201,344", "33,538,048"),
    ("GP-GAN", 3): ("134,217,728", "33,554,432", "134,184,960", "33,521,664"),
    ("GP-GAN", 4): ("134,217,728", "33,554,432", "134,152,192", "33,488,896"),
    ("GP-GAN", 5): ("12,582,912", "3,145,728", "12,570,624", "3,133,440"),
    ("GP-GAN", "total"): (
        "415,236,096", "103,809,024", "415,109,120", "103,412,048",
        "311,427,072", "311,697,072",
    ),
    ("EB-GAN", 2): ("2,147,483,648", "536,870,912", "2,147,418,112", "536,805,376"),
    ("EB-GAN", 3): ("2,147,483,648", "536,870,912", "2,147,352,576", "536,739,840"),
    ("EB-GAN", 4): ("2,147,483,648", "536,870,912", "2,147,221,504", "536,608,768"),
    ("EB-GAN", 5): ("2,147,483,648", "536,870,912", "2,146,959,360", "536,346,624"),
    ("EB-GAN", 6): ("2,147,483,648", "536,8709,12", "2,146,435,072", "535,822,336"),
    ("EB-GAN", 7): ("4,294,967,296", "1,073,741,824", "4,290,772,992", "1,069,547,520"),
    ("EB-GAN", "total"): (
        "15,032,385,536", "3,758,096,384", "15,026,159,616", "3,751,870,464",
        "11,274,289,152", "11,274,289,152",
    ),
}

_PRINTED_FIELDS = (
    "mults_naive", "mults_fused", "adds_naive", "adds_fused", "reduction_mults", "reduction_adds",
)


def _well_grouped(text):
    groups = text.split(",")
    return 1 <= len(groups[0]) <= 3 and all(len(g) == 3 for g in groups[1:])


def _compare_printed(key, row):
    flags = []
    for field, text in zip(_PRINTED_FIELDS, PRINTED_TABLE4.get(key, ())):
        value = int(text.replace(",", ""))
        if value != row[field]:
            flags.append(f"{key[0]} {key[1]} {field}: printed {text}, computed {row[field]:,}")
        elif not _well_grouped(text):
            flags.append(f"{key[0]} {key[1]} {field}: printed {text} (digit grouping), value {row[field]:,}")
    return flags


COLUMNS = (
    "model", "layer", "input_shape", "kernel_shape",
    "mults_naive", "mults_fused", "adds_naive", "adds_fused",
    "reduction_mults", "reduction_adds", "memory_saved_bytes",
)


@dataclass
class Table4Report:
    """Per-layer and per-model operation counts for the GAN generator layers.

    ``rows`` holds one dict per layer plus a ``layer == "total"`` row per model;
    ``flags`` lists published figures that differ from the computed ones.
    """

    rows: list
    flags: list

    def row(self, model, layer):
        for r in self.rows:
            if r["model"] == model and r["layer"] == layer:
                return r
        raise KeyError((model, layer))

    def to_json(self):
        return json.dumps({"columns": list(COLUMNS), "rows": self.rows, "flags": self.flags}, indent=2)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.rows)
        return buf.getvalue()

    @staticmethod
    def rows_from_csv(text):
        rows = []
        for rec in csv.DictReader(io.StringIO(text)):
            parsed = {}
            for key, value in rec.items():
                if key in ("model", "input_shape", "kernel_shape"):
                    parsed[key] = value
                elif key == "layer":
                    parsed[key] = value if value == "total" else int(value)
                else:
                    parsed[key] = int(value)
            rows.append(parsed)
        return rows


def _row(model, layer, shape, elem_bytes):
    naive = count_ops_naive(shape)
    fused = count_ops_fused(shape)
    return {
        "model": model,
        "layer": layer,
        "input_shape": shape.input_shape,
        "kernel_shape": shape.kernel_shape,
        "mults_naive": naive.mults,
        "mults_fused": fused.mults,
        "adds_naive": naive.adds,
        "adds_fused": fused.adds,
        "reduction_mults": naive.mults - fused.mults,
        "reduction_adds": naive.adds - fused.adds,
        "memory_saved_bytes": memory_saved_bytes(shape, elem_bytes),
    }


def table4_report(elem_bytes=4):
    """Operation counts for every GAN layer in :data:`GAN_LAYERS`, with model totals."""
    rows, flags = [], []
    summed = COLUMNS[4:]
    for model, layers in GAN_LAYERS.items():
        model_rows = [_row(model, layer, shape, elem_bytes) for layer, shape in layers.items()]
        total = {"model": model, "layer": "total", "input_shape": "", "kernel_shape": ""}
        total.update({col: sum(r[col] for r in model_rows) for col in summed})
        for r in model_rows + [total]:
            flags.extend(_compare_printed((model, r["layer"]), r))
        rows.extend(model_rows)
        rows.append(total)
    return Table4Report(rows=rows, flags=flags)


def shape_dict(shape):
    return asdict(shape)
