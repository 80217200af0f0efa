from __future__ import annotations

import math

import pytest
from hypothesis import given, strategies as st

from intentsim.config import DATA_DIR
from intentsim.errors import DegenerateTarget, ParseError, ValidationError
from intentsim.world import (
    Limits,
    Pose,
    VelocityCommand,
    area_of,
    bearing_to,
    load_scenario,
    scenario_from_dict,
    scenario_to_dict,
    step_kinematics,
    wrap_angle,
)

from conftest import minimal_scenario_dict


class TestLoadScenario:
    def test_minimal_square_centroid(self):
        sc = scenario_from_dict(minimal_scenario_dict(), base_dir=DATA_DIR)
        assert sc.areas[0].centroid == (0.0, 0.0)

    def test_object_outside_all_areas_names_object(self):
        raw = minimal_scenario_dict()
        raw["objects"][0]["position"] = [10.0, 10.0]
        with pytest.raises(ValidationError, match="obj_mug"):
            scenario_from_dict(raw, base_dir=DATA_DIR)

    def test_reference_scenario_has_four_category_groups(self, living_room, ontology):
        def root(category):
            node = category
            while ontology.parent(node) is not None:
                node = ontology.parent(node)
            return node

        roots = {root(o.category) for o in living_room.objects}
        assert {"food", "toys", "decorations", "tools"} <= roots

    def test_unknown_top_level_key_rejected(self):
        raw = minimal_scenario_dict()
        raw["extra"] = 1
        with pytest.raises(ParseError, match="extra"):
            scenario_from_dict(raw, base_dir=DATA_DIR)

    def test_unknown_object_key_rejected(self):
        raw = minimal_scenario_dict()
        raw["objects"][0]["grasbability"] = 0.5  # typo must fail loudly
        with pytest.raises(ParseError, match="grasbability"):
            scenario_from_dict(raw, base_dir=DATA_DIR)

    def test_duplicate_area_ids_rejected(self):
        raw = minimal_scenario_dict()
        raw["areas"].append(dict(raw["areas"][0]))
        with pytest.raises(ValidationError, match="duplicate"):
            scenario_from_dict(raw, base_dir=DATA_DIR)

    def test_self_intersecting_polygon_rejected(self):
        raw = minimal_scenario_dict()
        raw["areas"][0]["polygon"] = [[0, 0], [2, 2], [2, 0], [0, 2]]  # bowtie
        with pytest.raises(ValidationError, match="self-intersecting"):
            scenario_from_dict(raw, base_dir=DATA_DIR)

    def test_graspability_out_of_range_rejected(self):
        raw = minimal_scenario_dict()
        raw["objects"][0]["graspability"] = 0.0
        with pytest.raises(ValidationError, match="graspability"):
            scenario_from_dict(raw, base_dir=DATA_DIR)

    def test_unknown_relation_target_rejected(self):
        raw = minimal_scenario_dict()
        raw["objects"][0]["relations"] = [{"predicate": "on", "target": "nowhere"}]
        with pytest.raises(ValidationError, match="nowhere"):
            scenario_from_dict(raw, base_dir=DATA_DIR)

    def test_round_trip(self, living_room):
        again = scenario_from_dict(scenario_to_dict(living_room))
        assert again == living_room

    def test_malformed_file(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json", encoding="utf-8")
        with pytest.raises(ParseError):
            load_scenario(p)

    def test_labels_in_ontology_vocabulary(self, living_room, ontology):
        ontology.validate_labels([o.label for o in living_room.objects])


class TestKinematics:
    def test_straight_line(self):
        p = step_kinematics(Pose(0, 0, 0), VelocityCommand(1.0, 0.0), 1.0)
        assert p == Pose(1.0, 0.0, 0.0)

    def test_zero_command_identity(self):
        p = Pose(0.3, -0.7, 0.4)
        assert step_kinematics(p, VelocityCommand(0, 0), 0.1) == p

    def test_pure_rotation_normalizes(self):
        p = step_kinematics(Pose(0, 0, 0), VelocityCommand(0.0, math.pi), 1.0, Limits(omega_max=4.0))
        assert p.heading == pytest.approx(math.pi)
        assert -math.pi < p.heading <= math.pi

    def test_commands_clamped_to_limits(self):
        p = step_kinematics(Pose(0, 0, 0), VelocityCommand(100.0, 0.0), 1.0, Limits(v_max=1.0))
        assert p.x == pytest.approx(1.0)

    def test_dt_must_be_positive(self):
        with pytest.raises(ValueError):
            step_kinematics(Pose(0, 0, 0), VelocityCommand(0, 0), 0.0)

    @given(
        st.floats(-10, 10),
        st.floats(-10, 10),
        st.floats(-20, 20),
        st.lists(st.tuples(st.floats(-1, 1), st.floats(-2, 2)), min_size=1, max_size=30),
    )
    def test_heading_stays_normalized(self, x, y, h, cmds):
        pose = Pose(x, y, h)
        for v, w in cmds:
            pose = step_kinematics(pose, VelocityCommand(v, w), 0.1)
            assert -math.pi < pose.heading <= math.pi

    @given(st.floats(-1, 1), st.floats(-3, 3), st.floats(0.01, 1.0))
    def test_half_steps_compose_for_straight_motion(self, v, h, dt):
        start = Pose(0, 0, h)
        full = step_kinematics(start, VelocityCommand(v, 0.0), dt)
        half = step_kinematics(step_kinematics(start, VelocityCommand(v, 0.0), dt / 2), VelocityCommand(v, 0.0), dt / 2)
        assert half.x == pytest.approx(full.x, abs=1e-9)
        assert half.y == pytest.approx(full.y, abs=1e-9)

    def test_wrap_angle_boundaries(self):
        assert wrap_angle(math.pi) == pytest.approx(math.pi)
        assert wrap_angle(-math.pi) == pytest.approx(math.pi)
        assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)
        assert wrap_angle(0.0) == 0.0


class TestAreaOf:
    def test_center_of_square(self, living_room):
        assert area_of((3.0, 2.5), living_room) == "living_room"

    def test_far_outside(self, living_room):
        assert area_of((100.0, 100.0), living_room) is None

    def test_shared_edge_takes_lower_id(self, living_room):
        # x = 6 is shared between kitchen_counter and living_room
        assert area_of((6.0, 1.0), living_room) == "kitchen_counter"

    def test_repeated_calls_agree(self, living_room):
        points = [(i * 0.7, j * 0.9) for i in range(-2, 15) for j in range(-2, 10)]
        first = [area_of(p, living_room) for p in points]
        second = [area_of(p, living_room) for p in points]
        assert first == second


class TestBearing:
    def test_straight_ahead(self):
        assert bearing_to(Pose(0, 0, 0), (1, 0)) == pytest.approx(0.0)

    def test_left(self):
        assert bearing_to(Pose(0, 0, 0), (0, 1)) == pytest.approx(math.pi / 2)

    def test_heading_relative(self):
        assert bearing_to(Pose(0, 0, math.pi / 2), (0, 1)) == pytest.approx(0.0)

    def test_degenerate_target(self):
        with pytest.raises(DegenerateTarget):
            bearing_to(Pose(1, 2, 0), (1, 2))
