import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cmsthermo import build_truncation, log_law, partition_sum, renewal_shift, zero
from cmsthermo import cache, reports
from cmsthermo.infinity import log_restricted_sums
from cmsthermo.pressure import log_partition_sums


def test_plain_encodes_special_floats():
    out = reports.plain({"a": math.inf, "b": -math.inf, "c": math.nan, (1, 2): np.float64(0.5),
                         "d": np.arange(3), "e": (np.bool_(True),)})
    assert out == {"a": "inf", "b": "-inf", "c": None, "1 2": 0.5, "d": [0, 1, 2], "e": [True]}
    assert reports.from_plain(out)["b"] == -math.inf


json_values = st.recursive(
    st.none() | st.booleans() | st.integers() | st.floats(allow_nan=False) | st.text(max_size=5),
    lambda inner: st.lists(inner, max_size=4) | st.dictionaries(st.text(max_size=4), inner, max_size=4),
    max_leaves=20)


@given(json_values)
def test_dumps_round_trips(value):
    text = reports.dumps({"x": value})
    back = reports.from_plain(json.loads(text))["x"]
    # strings "inf"/"-inf" are the encoding of infinities, so compare through plain()
    assert reports.plain(back) == reports.plain(value)


def test_report_timestamp_is_the_only_difference():
    a = reports.dumps(reports.make_report("pressure", {"k": 1}, {"v": 1.5}, "conclusive", "2020-01-01"))
    b = reports.dumps(reports.make_report("pressure", {"k": 1}, {"v": 1.5}, "conclusive", "2021-06-30"))
    assert a != b
    assert reports.strip_timestamp(a) == reports.strip_timestamp(b)


def test_csv_text():
    text = reports.csv_text(["N", "value"], [[1, 0.1], [2, math.inf], [3, math.nan]])
    assert text == "N,value\n1,0.1\n2,inf\n3,\n"


def test_atomic_write_leaves_no_temp_files(tmp_path):
    p = reports.atomic_write(tmp_path / "sub" / "x.txt", "hello")
    assert p.read_text() == "hello"
    assert [f.name for f in p.parent.iterdir()] == ["x.txt"]


# cache -----------------------------------------------------------------------------


def test_cache_is_transparent(tmp_path):
    g = build_truncation(renewal_shift(), 30)
    phi = log_law(1.0)
    cold = log_partition_sums(g, phi, 1, 200)
    with cache.use(tmp_path) as c:
        first = log_partition_sums(g, phi, 1, 200)
        second = log_partition_sums(g, phi, 1, 200)
        assert (c.misses, c.hits) == (1, 1)
    assert np.array_equal(cold, first) and np.array_equal(first, second)


def test_cache_keys_separate_inputs(tmp_path):
    g = build_truncation(renewal_shift(), 30)
    with cache.use(tmp_path) as c:
        a = log_restricted_sums(g, zero(), 1, 100, 5, 5)
        b = log_restricted_sums(g, zero(), 1, 100, 5, 4)
        d = log_restricted_sums(g, log_law(1.0), 1, 100, 5, 5)
        assert c.misses == 3 and c.hits == 0
    assert not np.array_equal(a, b) and not np.array_equal(a, d)


def test_corrupt_cache_entry_is_recomputed(tmp_path):
    g = build_truncation(renewal_shift(), 20)
    with cache.use(tmp_path):
        ref = log_partition_sums(g, zero(), 1, 50)
    (entry,) = list(tmp_path.rglob("*.npy"))
    entry.write_bytes(b"not an array")
    with cache.use(tmp_path) as c, pytest.warns(cache.CacheWarning):
        again = log_partition_sums(g, zero(), 1, 50)
        assert c.misses == 1
    assert np.array_equal(ref, again)
    # the recomputed entry replaced the corrupt one
    with cache.use(tmp_path) as c, warnings.catch_warnings():
        warnings.simplefilter("error")
        log_partition_sums(g, zero(), 1, 50)
        assert c.hits == 1


def test_wrong_shape_entry_is_rejected(tmp_path):
    g = build_truncation(renewal_shift(), 20)
    with cache.use(tmp_path):
        log_partition_sums(g, zero(), 1, 50)
    (entry,) = list(tmp_path.rglob("*.npy"))
    np.save(entry, np.zeros(3))
    with cache.use(tmp_path), pytest.warns(cache.CacheWarning):
        assert log_partition_sums(g, zero(), 1, 50)[3] == pytest.approx(math.log(partition_sum(g, zero(), 1, 4)))


def test_cache_is_off_by_default():
    assert cache.active() is None
