import pytest

from hemac_client import (
    EpisodeCompleteError,
    NoEpisodeError,
    RemoteEnv,
    RemoteEnvError,
    ServerError,
)

# the primary engine is imported only as the test oracle; the client itself
# speaks nothing but the wire protocol
from hemac.env import Environment


class TestConnection:
    def test_hello_handshake(self, server_address):
        with RemoteEnv(server_address) as env:
            assert env.engine.startswith("hemac ")

    def test_env_var_address(self, server_address, monkeypatch):
        monkeypatch.setenv("HEMAC_SERVER", server_address)
        with RemoteEnv() as env:
            assert env.engine

    def test_missing_address(self, monkeypatch):
        monkeypatch.delenv("HEMAC_SERVER", raising=False)
        with pytest.raises(RemoteEnvError):
            RemoteEnv()

    def test_bad_address_format(self):
        with pytest.raises(RemoteEnvError):
            RemoteEnv("localhost")


class TestReset:
    def test_first_agent_and_caches(self, server_address):
        with RemoteEnv(server_address) as env:
            first = env.reset("simple_fleet_1q1o", seed=3)
            assert first == "quad_0"
            assert env.agents == ["quad_0", "obs_0"]
            assert env.agent_spaces["quad_0"]["obs_len"] == 31
            assert env.agent_spaces["obs_0"]["discrete_n"] == 3
            obs, reward, terminated, truncated, _info = env.last()
            assert len(obs) == 31
            assert (reward, terminated, truncated) == (0.0, False, False)

    def test_reset_deterministic(self, server_address):
        with RemoteEnv(server_address) as a, RemoteEnv(server_address) as b:
            a.reset("fleet_3q1o", seed=9)
            b.reset("fleet_3q1o", seed=9)
            assert a.last()[0] == b.last()[0]

    def test_unknown_scenario_surfaces_code(self, server_address):
        with RemoteEnv(server_address) as env:
            with pytest.raises(ServerError) as err:
                env.reset("mega_fleet", seed=0)
            assert err.value.code == "unknown_scenario"

    def test_query_before_reset(self, server_address):
        with RemoteEnv(server_address) as env:
            with pytest.raises(NoEpisodeError):
                env.last()
            with pytest.raises(NoEpisodeError):
                env.state()


class TestStep:
    def test_iteration_follows_canonical_order(self, server_address):
        with RemoteEnv(server_address) as env:
            env.reset("complex_fleet_3q1o1p", seed=1)
            seen = []
            for agent in env.agent_iter(max_steps=10):
                seen.append(agent)
                env.step(0)
            assert seen == ["quad_0", "quad_1", "quad_2", "obs_0", "prov_0"] * 2

    def test_rewards_zero_until_cycle_boundary(self, server_address):
        with RemoteEnv(server_address) as env:
            env.reset("fleet_3q1o", seed=5)
            rewards = []
            for _ in range(8):
                env.step(0)
                rewards.append(env.last()[1])
            assert rewards[0] == rewards[1] == rewards[2] == 0.0
            assert rewards[4] == rewards[5] == rewards[6] == 0.0

    def test_wrong_shape_rejected_locally(self, server_address):
        with RemoteEnv(server_address) as env:
            env.reset("simple_fleet_1q1o", seed=2)
            with pytest.raises(ValueError):
                env.step(99)  # out of the quadcopter's discrete range
            with pytest.raises(TypeError):
                env.step("north")
            with pytest.raises(ValueError):
                env.step([0.1, 0.2, 0.3])  # too many dims
            # the failed attempts never reached the server: stepping works
            assert env.step(0) == "obs_0"

    def test_continuous_actions(self, server_address):
        with RemoteEnv(server_address) as env:
            env.reset("simple_fleet_1q1o", seed=2)
            assert env.step([0.5, -0.25]) == "obs_0"
            assert env.step([1.0]) == "quad_0"

    def test_step_after_truncation_raises(self, server_address):
        with RemoteEnv(server_address) as env:
            env.reset("simple_fleet_1q1o", seed=1)
            horizon = env.horizon
            for _ in range(horizon * 2):
                env.step(0)
            assert env.truncated
            assert env.current_agent is None
            with pytest.raises(EpisodeCompleteError):
                env.step(0)

    def test_observe_and_state_match_engine(self, server_address):
        with RemoteEnv(server_address) as env:
            env.reset("complex_fleet_3q1o1p", seed=4)
            oracle = Environment("complex_fleet_3q1o1p")
            oracle.reset(4)
            for agent in oracle.agent_order:
                assert env.observe(agent) == oracle.observe(agent).tolist()
            assert env.state() == oracle.global_state().tolist()


class TestPaddedSession:
    def test_unified_spaces_end_to_end(self, server_address):
        with RemoteEnv(server_address, padded=True) as env:
            env.reset("simple_fleet_1q1o", seed=6)
            assert env.unified_space["obs_dim"] == 31
            assert len(env.last()[0]) == 31
            env.step(0)  # quad
            # unified index 7 is masked-invalid for the observer but legal
            assert env.step(7) == "quad_0"
            assert len(env.observe("obs_0")) == 31
