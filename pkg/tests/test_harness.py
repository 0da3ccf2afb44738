import math

import numpy as np
import pytest

from telearm import (
    Target,
    TrialConfig,
    TrialKind,
    calibrate_board,
    check_hit,
    forward_arm,
    nondimensionalize,
    offset_sweep,
    run_trial,
    summarize,
)
from telearm.errors import DuplicateCenter, TrialTimeout
from telearm.harness import SEQ_ORDER, TrialLog, pilot_goal_poses
from telearm.pilots import PilotKind, PilotParams
from telearm.retarget import MappingMode


def run_default_trial(cfg, kind=TrialKind.RXN_S, mapping=MappingMode.JOINT, seed=1, pilot=None, **kw):
    tc = TrialConfig(kind, seed=seed)
    pilot = pilot or cfg.pilot
    return run_trial(
        tc, pilot, mapping, cfg.board(), cfg.human, cfg.robot, cfg.gains, cfg.plant,
        home_pose=cfg.home_pose, **kw,
    )


class TestBoard:
    def test_centers_are_fk_wrist_points(self, session_cfg, board):
        for target, pose in zip(board.targets, board.touch_poses):
            pw = forward_arm(session_cfg.robot, pose).p_w
            assert np.allclose(pw, target.center, atol=1e-12)

    def test_duplicate_centers_rejected(self, session_cfg):
        poses = list(session_cfg.board_touch_poses)
        poses[1] = poses[0]
        with pytest.raises(DuplicateCenter):
            calibrate_board(session_cfg.robot, poses, session_cfg.board_radius)

    def test_six_poses_required(self, session_cfg):
        with pytest.raises(ValueError):
            calibrate_board(session_cfg.robot, session_cfg.board_touch_poses[:5], 0.03)

    def test_check_hit_boundary(self):
        t = Target(0, (0.0, 0.1, -0.2), 0.03)
        assert check_hit((0.0, 0.1, -0.2), t)
        assert check_hit((0.03, 0.1, -0.2), t)  # distance == radius: closed ball
        assert not check_hit((0.06, 0.1, -0.2), t)


class TestTrialConfig:
    def test_reaction_trials_must_have_ten_hits(self):
        with pytest.raises(ValueError):
            TrialConfig(TrialKind.RXN_S, hits_per_trial=5)
        TrialConfig(TrialKind.SEQ, hits_per_trial=5)  # ignored for SEQ

    def test_rates_must_divide(self):
        with pytest.raises(ValueError):
            TrialConfig(TrialKind.SEQ, tick_rate=1000, log_rate=300)


class TestRunTrial:
    def test_bitwise_determinism(self, session_cfg):
        a = run_default_trial(session_cfg, seed=5)
        b = run_default_trial(session_cfg, seed=5)
        assert a.hits == b.hits
        assert np.array_equal(a.samples, b.samples)

    def test_seq_counts_and_order(self, session_cfg):
        log = run_default_trial(session_cfg, kind=TrialKind.SEQ, seed=2)
        assert len(log.hits) == 5
        assert [h.target_id for h in log.hits] == list(SEQ_ORDER[1:])
        assert log.first_hit_tick is not None
        assert all(h.light_tick == 0 for h in log.hits)
        # interval chain is consistent with the raw hit ticks
        ticks = [log.first_hit_tick] + [h.hit_tick for h in log.hits]
        for prev, rec in zip(ticks, log.hits):
            assert rec.reaction_time == (rec.hit_tick - prev) / log.config.tick_rate

    def test_seq_with_instant_step_pilot(self, session_cfg):
        pilot = PilotParams(kind=PilotKind.STEP, seed=3)
        log = run_default_trial(session_cfg, kind=TrialKind.SEQ, seed=3, pilot=pilot)
        assert len(log.hits) == 5

    def test_rxns_counts_and_delays(self, session_cfg):
        log = run_default_trial(session_cfg, kind=TrialKind.RXN_S, seed=4)
        assert len(log.hits) == 10
        assert all(h.target_id == 1 for h in log.hits)
        # light delays measured from the previous hit stay in the window
        prev = 0
        for h in log.hits:
            delay = (h.light_tick - prev) / log.config.tick_rate
            assert 0.5 - 1e-9 <= delay <= 1.0 + 1e-9
            prev = h.hit_tick

    def test_reaction_times_tick_consistent(self, session_cfg):
        log = run_default_trial(session_cfg, kind=TrialKind.RXN_M, seed=6)
        for h in log.hits:
            assert h.reaction_time > 0
            n = h.reaction_time * log.config.tick_rate
            assert abs(n - round(n)) < 1e-9
            assert h.hit_tick > h.light_tick

    def test_decimation_every_five_ticks(self, session_cfg):
        log = run_default_trial(session_cfg, seed=7)
        ticks = log.samples[:, 0].astype(int)
        assert np.all(np.diff(ticks) == log.config.log_every)
        assert np.all(ticks % log.config.log_every == 0)

    def test_timeout_marks_and_raises(self, session_cfg):
        with pytest.raises(TrialTimeout) as exc:
            run_default_trial(session_cfg, seed=8, per_hit_timeout=0.05)
        log = exc.value.log
        assert log is not None and log.timeout
        assert len(log.hits) < 10

    def test_mapping_recorded(self, session_cfg):
        log = run_default_trial(session_cfg, mapping=MappingMode.TASK, seed=9)
        assert log.mapping is MappingMode.TASK
        assert len(log.hits) == 10


class TestGoalPoses:
    def test_joint_goals_are_touch_poses(self, session_cfg, board):
        goals = pilot_goal_poses(board, MappingMode.JOINT, session_cfg.human, session_cfg.robot)
        assert goals == board.touch_poses

    def test_task_goals_invert_the_mapping(self, session_cfg, board):
        from telearm.retarget import map_task

        goals = pilot_goal_poses(board, MappingMode.TASK, session_cfg.human, session_cfg.robot)
        for goal, target in zip(goals, board.targets):
            cmd, _ = map_task(goal, session_cfg.human, session_cfg.robot)
            pw = forward_arm(session_cfg.robot, cmd).p_w
            assert np.linalg.norm(pw - target.center) < 1e-9


class TestSummarize:
    def _fake_log(self, session_cfg, trial_id, rts):
        from telearm.harness import HitRecord

        hits = []
        light = 700
        for r in rts:
            hit = light + int(round(r * 1000))
            hits.append(HitRecord(1, light, hit, (hit - light) / 1000))
            light = hit + 800
        hits = tuple(hits)
        return TrialLog(
            config=TrialConfig(TrialKind.RXN_S, seed=0),
            mapping=MappingMode.JOINT,
            trial_id=trial_id,
            hits=hits,
            first_hit_tick=None,
            samples=np.zeros((1, 19)),
        )

    def test_two_point_stats_population_sd(self, session_cfg):
        log = self._fake_log(session_cfg, 0, [0.4, 0.6])
        s = summarize([log])
        assert s.trials[0].mean == pytest.approx(0.5)
        assert s.trials[0].sd == pytest.approx(0.1)  # population convention

    def test_identical_trials_stable_mean(self, session_cfg):
        logs = [self._fake_log(session_cfg, i, [0.4, 0.6]) for i in range(12)]
        s = summarize(logs, stable_k=10)
        assert s.stable_mean == pytest.approx(0.5)
        assert not s.used_all_trials

    def test_short_history_uses_all_with_flag(self, session_cfg):
        logs = [self._fake_log(session_cfg, i, [0.3 + 0.1 * i]) for i in range(4)]
        s = summarize(logs, stable_k=10)
        assert s.used_all_trials
        assert s.stable_k == 4

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            summarize([])


class TestNondimensionalize:
    def test_unit_length_identity(self, session_cfg):
        log = run_default_trial(session_cfg, seed=11)
        from telearm import ArmGeometry

        unit_h = bare_unit_geometry(session_cfg.human)
        unit_r = bare_unit_geometry(session_cfg.robot)
        traj = nondimensionalize(log, unit_h, unit_r)
        assert np.allclose(traj.human_frontal, log.samples[:, [17, 18]], atol=1e-15)
        assert np.allclose(traj.robot_frontal, log.samples[:, [14, 15]], atol=1e-15)

    def test_scale_invariance(self, session_cfg):
        log = run_default_trial(session_cfg, seed=11)
        a = nondimensionalize(log, session_cfg.human, session_cfg.robot)
        scaled = TrialLog(
            config=log.config,
            mapping=log.mapping,
            trial_id=log.trial_id,
            hits=log.hits,
            first_hit_tick=log.first_hit_tick,
            samples=np.hstack([log.samples[:, :13], 2 * log.samples[:, 13:]]),
        )
        b = nondimensionalize(scaled, session_cfg.human.scaled(2), session_cfg.robot.scaled(2))
        assert np.allclose(a.robot_frontal, b.robot_frontal, atol=1e-12)
        assert np.allclose(a.human_sagittal, b.human_sagittal, atol=1e-12)


def bare_unit_geometry(g):
    from telearm import ArmGeometry

    return ArmGeometry(g.l1, 0.5, 0.5, g.limits)


class TestOffsetSweep:
    def test_identical_geometry_joint_mapping_is_aligned(self, session_cfg):
        off = offset_sweep(0.7854, MappingMode.JOINT, session_cfg.human, session_cfg.human)
        assert off < 0.5

    def test_level_outside_limits_rejected(self, session_cfg):
        with pytest.raises(ValueError):
            offset_sweep(3.0, MappingMode.JOINT, session_cfg.human, session_cfg.robot)

    def test_offset_grows_with_roll_level(self, session_cfg):
        for mapping in (MappingMode.JOINT, MappingMode.TASK):
            hi = offset_sweep(math.radians(45), mapping, session_cfg.human, session_cfg.robot)
            lo = offset_sweep(0.0, mapping, session_cfg.human, session_cfg.robot)
            assert hi > lo
