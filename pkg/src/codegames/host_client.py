"""Client for the out-of-process candidate-execution host.

The host is a child process that loads candidate source text and serves the
six-function API plus samplers over a line-delimited protocol: one request
object per line on stdin, one reply per line on stdout, each reply carrying
the request id. This client only speaks that wire protocol, so any host
implementation with the same protocol works; it can also respawn a dead host
and reload the candidate.
"""

from __future__ import annotations

import subprocess
from typing import Optional, Sequence

from codegames.core import WorldModelHandle
from codegames.errors import ModelFault
from codegames.values import canonical_serialize, parse_canonical


class HostError(ModelFault):
    pass


class HostSession:
    def __init__(self, command: Sequence[str]):
        self.command = list(command)
        self._proc = None
        self._next_id = 0
        self._source = None
        self.respawn_count = 0

    # -- process management -------------------------------------------------

    def start(self):
        self._proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )

    @property
    def alive(self) -> bool:
        return self._proc is not None and self._proc.poll() is None

    def respawn(self):
        """Restart a dead (or poisoned) host and reload the last candidate."""
        self.close()
        self.start()
        self.respawn_count += 1
        if self._source is not None:
            self._request("load", {"source": self._source})

    def close(self):
        if self._proc is not None:
            try:
                if self.alive:
                    self._send({"id": self._next_id, "op": "shutdown", "args": {}})
                    self._proc.wait(timeout=5)
            except Exception:
                self._proc.kill()
            finally:
                self._proc = None

    # -- protocol -----------------------------------------------------------

    def _send(self, message: dict):
        self._proc.stdin.write(canonical_serialize(message) + "\n")
        self._proc.stdin.flush()

    def _request(self, op: str, args: dict):
        if not self.alive:
            raise HostError(f"host process is not running (op={op})", trace="")
        self._next_id += 1
        request_id = self._next_id
        try:
            self._send({"id": request_id, "op": op, "args": args})
            line = self._proc.stdout.readline()
        except (BrokenPipeError, OSError) as exc:
            raise HostError(f"host connection lost: {exc!r}", trace="") from exc
        if not line:
            raise HostError("host closed its output (session dead)", trace="")
        reply = parse_canonical(line)
        if reply.get("id") != request_id:
            raise HostError(f"reply id {reply.get('id')} != request id {request_id}", trace="")
        if not reply.get("ok"):
            error = reply.get("error") or {}
            raise HostError(
                f"{error.get('type', 'Error')}: {error.get('message', '')}",
                trace=error.get("trace", ""),
            )
        return reply.get("value")

    def ping(self) -> bool:
        return self._request("ping", {}) == "pong"

    def load(self, source: str):
        self._source = source
        return self._request("load", {"source": source})

    # -- six-function API ---------------------------------------------------

    def apply_action(self, state, action):
        return self._request("apply_action", {"state": state, "action": action})

    def get_current_player(self, state):
        return self._request("get_current_player", {"state": state})

    def get_player_name(self, player_id):
        return self._request("get_player_name", {"player_id": player_id})

    def get_rewards(self, state):
        return self._request("get_rewards", {"state": state})

    def get_legal_actions(self, state):
        return self._request("get_legal_actions", {"state": state})

    def get_observations(self, state):
        return self._request("get_observations", {"state": state})

    def resample_history(self, obs_action_history, player_id, seed, last_is_terminal=None):
        args = {
            "obs_action_history": [list(pair) for pair in obs_action_history],
            "player_id": player_id,
            "seed": seed,
        }
        if last_is_terminal is not None:
            args["last_is_terminal"] = last_is_terminal
        return self._request("resample_history", args)

    def resample_state(self, obs_action_history, player_id, seed):
        return self._request(
            "resample_state",
            {
                "obs_action_history": [list(pair) for pair in obs_action_history],
                "player_id": player_id,
                "seed": seed,
            },
        )

    def value_function(self, state, player_id):
        return self._request("value_function", {"state": state, "player_id": player_id})

    # -- adapters -----------------------------------------------------------

    def as_world_model(self, name: str = "hosted", num_players: int = 2) -> WorldModelHandle:
        def resample_history(history, player_id, rng, last_is_terminal=False):
            return self.resample_history(
                history, player_id, rng.randrange(2**32), last_is_terminal
            )

        def resample_state(history, player_id, rng):
            return self.resample_state(history, player_id, rng.randrange(2**32))

        return WorldModelHandle(
            name=name,
            num_players=num_players,
            apply_action=self.apply_action,
            get_current_player=self.get_current_player,
            get_rewards=self.get_rewards,
            get_legal_actions=self.get_legal_actions,
            get_observations=self.get_observations,
            resample_history=resample_history,
            resample_state=resample_state,
        )
