"""Smoke test for the gefs_py extension.

Build first, e.g. `maturin develop -m crates/python/Cargo.toml`, or
`cargo build -p gefs-python --release --features extension-module` and put
target/release/libgefs_py.so on the path as gefs_py.so.
"""

import math
import pathlib
import tempfile

import gefs_py

DATA = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "data"


def main():
    model = gefs_py.Model.train(str(DATA / "iris.csv"), n_trees=20, seed=1)
    assert model.mode == "gef" and model.n_trees == 20
    assert model.class_labels == ["setosa", "versicolor", "virginica"]

    row = [5.1, 3.5, 1.4, 0.2]
    p = model.predict_proba(row)
    assert abs(sum(p) - 1.0) < 1e-9
    assert model.predict(row) == 0

    # petal measurements missing: sepal alone still points to setosa
    assert model.predict([5.0, 3.6, None, None]) == 0
    prior = model.predict_proba([None] * 4)
    assert all(abs(v - 1 / 3) < 0.1 for v in prior)

    plus = model.with_mode("gefplus")
    near = plus.log_density(row)
    far = plus.log_density([20.0, 20.0, 20.0, 20.0])
    assert math.isfinite(near) and near > far
    try:
        model.log_density(row)
        raise AssertionError("log_density needs gefplus")
    except ValueError:
        pass

    with tempfile.TemporaryDirectory() as d:
        path = pathlib.Path(d) / "model.json"
        plus.save(str(path))
        back = gefs_py.Model.load(str(path))
        assert back.predict_proba([5.9, None, 4.2, None]) == plus.predict_proba([5.9, None, 4.2, None])

    assert gefs_py.auc_roc([-1.0, -2.0], [-5.0, -6.0]) == 1.0
    print("smoke test ok:", model)


if __name__ == "__main__":
    main()
