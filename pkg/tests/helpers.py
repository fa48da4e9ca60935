"""Shared scenario builders for the planner test suites.

The lattice problem uses axis-aligned 0.1 m footstep actions with zero
yaw so distinct action sequences land on shared poses: the reachable
graph stays small enough for exhaustive search oracles.
"""

from __future__ import annotations

import math

from locomanip.collision import Obb2
from locomanip.fr_planner import (
    FootSide,
    FootstepActionSet,
    FrConfig,
    FrPlanner,
    FrProblem,
    HandMaps,
    HandMode,
    generate_actions,
)
from locomanip.op_planner import holonomic_path
from locomanip.reachability import (
    AnnulusReachOracle,
    FixedGrasp,
    GridSpec,
    HandSide,
    RollingGrasp,
    generate_map,
    generate_rolling_family,
)
from locomanip.se2 import Pose2

GRID = GridSpec((-1.6, 1.6), (-1.6, 1.6), 36, 0.1, math.radians(10.0))
ORACLE = AnnulusReachOracle(shoulder_lateral=0.15, shoulder_height=1.0,
                            r_min=0.3, r_max=0.8,
                            bearing_limit=math.radians(80.0))
ROBOT_BOX = Obb2(Pose2(0, 0, 0), (0.22, 0.18))
OBJ_BOX = Obb2(Pose2(0, 0, 0), (0.12, 0.12))

LATTICE_ACTIONS = FootstepActionSet.from_actions(FootSide.RIGHT, [
    Pose2(0.1, -0.2, 0.0), Pose2(0.2, -0.2, 0.0),
    Pose2(0.0, -0.2, 0.0), Pose2(-0.1, -0.2, 0.0),
])


def fixed_maps(grasp_height=1.0, oracle=ORACLE, spec=GRID) -> HandMaps:
    grasp = FixedGrasp(Pose2(0, 0, 0), height=grasp_height)
    return HandMaps(generate_map(oracle, HandSide.LEFT, grasp, spec),
                    generate_map(oracle, HandSide.RIGHT, grasp, spec))


def lattice_problem(length=0.6, obstacles=(), start_hand=HandMode.LEFT,
                    actions=LATTICE_ACTIONS, maps=None) -> FrProblem:
    path = holonomic_path([Pose2(0, 0, 0), Pose2(length, 0, 0)], 0.05)
    return FrProblem(
        path=path, maps=maps or fixed_maps(), actions=actions,
        obstacles=tuple(obstacles), robot_box=ROBOT_BOX, obj_box=OBJ_BOX,
        initial_left=Pose2(-0.55, 0.1, 0), initial_right=Pose2(-0.55, -0.1, 0),
        start_hand=start_hand)


def oracle_cfg(**overrides) -> FrConfig:
    """Admissible-mode configuration for optimality comparisons."""
    base = dict(n_obj_max=3, c_step=0.3, c_regrasp=0.5, nominal_offset=1.1,
                w_nominal=0.0, epsilon_init=2.0, epsilon_decay=0.5,
                time_budget=60.0)
    base.update(overrides)
    return FrConfig(**base)


def guided_cfg(**overrides) -> FrConfig:
    """Nominal-pose-guided configuration for behavioral tests."""
    base = dict(n_obj_max=3, c_step=0.3, c_regrasp=0.5, nominal_offset=0.55,
                w_nominal=1.0, epsilon_init=8.0, epsilon_decay=0.5,
                time_budget=30.0)
    base.update(overrides)
    return FrConfig(**base)


def halton_actions(n=8):
    region = [(-0.2, -0.35), (0.3, -0.35), (0.3, -0.15), (-0.2, -0.15)]
    return generate_actions(n, region, (math.radians(-15), math.radians(15)))


BOBBIN_GRASP = RollingGrasp(handle_radius=0.25, rolling_radius=0.75)


def rolling_maps(angles=None, oracle=None, spec=GRID) -> HandMaps:
    angles = angles or [math.radians(a) for a in range(0, 50, 5)]
    oracle = oracle or AnnulusReachOracle(
        shoulder_lateral=0.15, shoulder_height=1.0, r_min=0.3, r_max=0.9,
        bearing_limit=math.radians(80.0))
    return HandMaps(
        generate_rolling_family(oracle, HandSide.LEFT, BOBBIN_GRASP, angles, spec),
        generate_rolling_family(oracle, HandSide.RIGHT, BOBBIN_GRASP, angles, spec))


def rolling_problem(length=1.0, angles=None, obstacles=()) -> FrProblem:
    path = holonomic_path([Pose2(0, 0, 0), Pose2(length, 0, 0)], 0.05)
    return FrProblem(
        path=path, maps=rolling_maps(angles), actions=LATTICE_ACTIONS,
        obstacles=tuple(obstacles), robot_box=ROBOT_BOX,
        obj_box=Obb2(Pose2(0, 0, 0), (0.2, 0.15)),
        initial_left=Pose2(-0.55, 0.1, 0), initial_right=Pose2(-0.55, -0.1, 0))


def run_to_completion(planner: FrPlanner, budget=None):
    return list(planner.solve(budget=budget))
