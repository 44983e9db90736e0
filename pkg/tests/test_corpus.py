import numpy as np
import pytest

from wavesrc.corpus import PRESETS, build_profile, build_source, descriptor_hash, get_scenario, scenario_from_config
from wavesrc.sources import Bump, KaiserBessel, SourceError


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_are_consistent(name):
    scen = get_scenario(name)
    src = scen.source
    src.check_support()
    if name == "narrow_ip1":
        # support fills the closed unit ball; the taper makes f vanish on the sphere R = 1
        assert src.spatial_radius == scen.radius_R
        assert src.spatial[0].radial(np.array([scen.radius_R]))[0] == 0.0
    else:
        src.check_geometry(scen.problem, scen.radius_R)
    assert scen.grid.horizon_T > src.T0 + 2 * scen.radius_R
    assert scen.windows == sorted(scen.windows)


def test_profiles_from_descriptors():
    assert build_profile({"type": "kaiser_bessel", "radius": 2.0}) == KaiserBessel(2.0)
    assert build_profile({"type": "bump", "t0": 0, "t1": 1}) == Bump(0, 1)
    with pytest.raises(SourceError, match="unknown"):
        build_profile({"type": "triangle"})
    with pytest.raises(SourceError, match="does not take"):
        build_profile({"type": "bump", "t0": 0, "t1": 1, "sigma": 2})


def test_descriptor_hash_ignores_key_order():
    a = {"kind": "separable_xt", "T0": 1.0, "support_radius": 1.0}
    b = {"support_radius": 1.0, "T0": 1.0, "kind": "separable_xt"}
    assert descriptor_hash(a) == descriptor_hash(b)
    assert descriptor_hash(a) != descriptor_hash({**a, "T0": 2.0})


def test_config_overrides():
    scen = scenario_from_config({"preset": "ip1_sweep", "measurement": {"n_theta": 8, "n_phi": 16},
                                 "grid": {"n_time": 501}})
    assert (scen.n_theta, scen.n_phi, scen.grid.n_time) == (8, 16, 501)
    assert scen.radius_R == get_scenario("ip1_sweep").radius_R
    assert get_scenario("ip3_sweep").options["continuation_degree"] == 4
    with pytest.raises(ValueError):
        scenario_from_config({"source": get_scenario("narrow_ip1").source_desc})
    with pytest.raises(KeyError):
        get_scenario("nope")


def test_planar_source_from_descriptor():
    src = build_source(get_scenario("ip3_planar").source_desc)
    assert src.kind == "planar" and src.vertical is not None
