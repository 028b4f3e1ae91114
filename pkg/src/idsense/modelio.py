"""Model persistence.

A model directory holds three text tables sharing a ``<rows> <dim>`` header
(``senses.txt`` rows ``word#identity v1 .. vd``, ``context.txt`` rows
``word v1 .. vd``, ``identity.txt`` rows ``identity v1 .. vd``, values with 6
significant digits) and ``.npy`` sidecars holding the exact float64 matrices
and sense frequencies.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .corpus import Vocabulary
from .hetnet import SenseRegistry
from .trainer import EmbeddingModel

TABLES = ("senses", "context", "identity")


class ModelFormatError(ValueError):
    pass


def _write_table(path, names, matrix):
    rows, dim = matrix.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{rows} {dim}\n")
        for name, vec in zip(names, matrix):
            fh.write(name + " " + " ".join(f"{v:.6g}" for v in vec.tolist()) + "\n")


def _read_table(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2 or not all(h.isdigit() for h in header):
            raise ModelFormatError(f"{path}: corrupted header, expected '<rows> <dim>'")
        rows, dim = int(header[0]), int(header[1])
        names, values = [], []
        for lineno, line in enumerate(fh, 2):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != dim + 1:
                raise ModelFormatError(f"{path}:{lineno}: expected {dim} values, got {len(parts) - 1}")
            names.append(parts[0])
            try:
                values.append([float(v) for v in parts[1:]])
            except ValueError:
                raise ModelFormatError(f"{path}:{lineno}: non-numeric value") from None
    if len(names) != rows:
        raise ModelFormatError(f"{path}: header declares {rows} rows, found {len(names)}")
    return names, np.array(values, dtype=np.float64).reshape(rows, dim)


def save_model(model: EmbeddingModel, directory):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    _write_table(d / "senses.txt", model.sense_names(), model.sense_vectors)
    _write_table(d / "context.txt", model.vocab.tokens, model.context_vectors)
    _write_table(d / "identity.txt", [str(i) for i in range(len(model.identity_vectors))], model.identity_vectors)
    np.save(d / "senses.npy", model.sense_vectors)
    np.save(d / "context.npy", model.context_vectors)
    np.save(d / "identity.npy", model.identity_vectors)
    freq = model.sense_freq if model.sense_freq is not None else np.zeros(len(model.sense_vectors))
    np.save(d / "sense_freq.npy", np.asarray(freq, dtype=np.float64))


def load_model(directory, binary=True) -> EmbeddingModel:
    """Load a saved model; exact ``.npy`` values are used when present and ``binary`` is set."""
    d = Path(directory)
    tables = {}
    for name in TABLES:
        path = d / f"{name}.txt"
        if not path.exists():
            raise FileNotFoundError(f"model file not found: {path}")
        tables[name] = _read_table(path)
    dims = {name: tables[name][1].shape[1] for name in TABLES}
    if len(set(dims.values())) != 1:
        raise ModelFormatError(f"{d}: dimension mismatch between files {dims}")
    sense_names, S = tables["senses"]
    words, C = tables["context"]
    _, I = tables["identity"]
    if binary:
        for name, ref in (("senses", S), ("context", C), ("identity", I)):
            path = d / f"{name}.npy"
            if path.exists():
                arr = np.load(path)
                if arr.shape != ref.shape:
                    raise ModelFormatError(f"{path}: shape {arr.shape} disagrees with {name}.txt {ref.shape}")
                if name == "senses":
                    S = arr
                elif name == "context":
                    C = arr
                else:
                    I = arr
    index = {w: i for i, w in enumerate(words)}
    sw, si = [], []
    for name in sense_names:
        word, sep, ident = name.rpartition("#")
        if not sep or word not in index or not ident.isdigit() or int(ident) >= len(I):
            raise ModelFormatError(f"{d / 'senses.txt'}: bad sense name {name!r}")
        sw.append(index[word])
        si.append(int(ident))
    registry = SenseRegistry(np.array(sw, np.int64), np.array(si, np.int64), len(words), len(I))
    if np.any(np.diff(registry._keys) <= 0):
        raise ModelFormatError(f"{d / 'senses.txt'}: sense rows out of order or duplicated")
    freq_path = d / "sense_freq.npy"
    sense_freq = np.load(freq_path) if freq_path.exists() else None
    if sense_freq is not None and len(sense_freq) != len(S):
        raise ModelFormatError(f"{freq_path}: length {len(sense_freq)} disagrees with {len(S)} senses")
    word_freq = np.zeros(len(words), dtype=np.int64)
    if sense_freq is not None:
        np.add.at(word_freq, registry.words, sense_freq.astype(np.int64))
    vocab = Vocabulary(tuple(words), word_freq)
    return EmbeddingModel(S, C, I, vocab, registry, sense_freq)
