"""Line-protocol server that executes untrusted candidate source text.

One request object per line on stdin, one reply per line on stdout, strictly
in order. A request is ``{"id": int, "op": str, "args": {...}}``; the reply is
``{"id": id, "ok": true, "value": ...}`` or ``{"id": id, "ok": false,
"error": {"type", "message", "trace"}}``. A line that cannot be parsed gets
an error reply with id -1. Candidate exceptions are converted to structured
errors carrying the traceback text. Candidate code runs under a sandbox: no
network, file writes only inside a scratch directory, bounded memory, and a
per-call wall-clock limit; a timed-out call poisons the session (every later
request except shutdown errors out, so the parent respawns the process).
"""

from __future__ import annotations

import argparse
import builtins
import inspect
import json
import math
import os
import random
import signal
import socket
import sys
import tempfile
import traceback

SAMPLER_OPS = ("resample_history", "resample_state")
MODEL_OPS = (
    "apply_action",
    "get_current_player",
    "get_player_name",
    "get_rewards",
    "get_legal_actions",
    "get_observations",
    "value_function",
)


class SandboxViolation(Exception):
    pass


class CallTimeout(Exception):
    pass


def _normalize(value):
    if value is None or isinstance(value, (bool, str, int)):
        return value
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            raise ValueError(f"non-finite number: {value!r}")
        return int(value) if value.is_integer() else value
    if isinstance(value, (list, tuple)):
        return [_normalize(v) for v in value]
    if isinstance(value, dict):
        return {k: _normalize(v) for k, v in value.items()}
    raise ValueError(f"unsupported value of type {type(value).__name__}")


def _dumps(value) -> str:
    return json.dumps(_normalize(value), sort_keys=True, separators=(",", ":"))


def enforce_sandbox(scratch_dir: str, max_memory_mb: int):
    """Install the isolation policy: scratch-only writes, no sockets, and an
    address-space cap. Applied once at startup, before any candidate loads."""
    scratch = os.path.realpath(scratch_dir)
    os.makedirs(scratch, exist_ok=True)
    os.chdir(scratch)

    real_open = builtins.open
    write_modes = set("wax+")

    def guarded_open(file, mode="r", *args, **kwargs):
        if isinstance(file, (str, os.PathLike)) and write_modes & set(str(mode)):
            path = os.path.realpath(os.fspath(file))
            if not path.startswith(scratch + os.sep) and path != scratch:
                raise SandboxViolation(f"write outside scratch dir: {file!r}")
        return real_open(file, mode, *args, **kwargs)

    builtins.open = guarded_open
    io_module = sys.modules.get("io")
    if io_module is not None:
        io_module.open = guarded_open

    def deny_socket(*args, **kwargs):
        raise SandboxViolation("network access is not allowed")

    socket.socket = deny_socket
    socket.create_connection = deny_socket
    socket.socketpair = deny_socket

    if max_memory_mb > 0:
        import resource

        limit = max_memory_mb * 1024 * 1024
        resource.setrlimit(resource.RLIMIT_AS, (limit, limit))


class Session:
    def __init__(self, timeout_seconds: float):
        self.timeout_seconds = timeout_seconds
        self.env = None
        self.poisoned = False
        self.call_count = 0

    # -- candidate execution ------------------------------------------------

    def _timed(self, fn, *args):
        def on_alarm(signum, frame):
            raise CallTimeout(
                f"candidate call exceeded {self.timeout_seconds}s wall clock"
            )

        previous = signal.signal(signal.SIGALRM, on_alarm)
        signal.setitimer(signal.ITIMER_REAL, self.timeout_seconds)
        try:
            return fn(*args)
        finally:
            signal.setitimer(signal.ITIMER_REAL, 0)
            signal.signal(signal.SIGALRM, previous)

    def _candidate(self, name):
        if self.env is None:
            raise RuntimeError("no candidate loaded")
        fn = self.env.get(name)
        if not callable(fn):
            raise RuntimeError(f"candidate does not define {name}()")
        return fn

    # -- operations ---------------------------------------------------------

    def handle(self, op: str, args: dict):
        if self.poisoned and op != "shutdown":
            raise RuntimeError("session poisoned by an earlier timeout")
        self.call_count += 1
        if op == "ping":
            return "pong"
        if op == "load":
            env = {}
            self._timed(exec, args["source"], env)
            self.env = env
            return {"functions": sorted(k for k, v in env.items() if callable(v))}
        if op == "get_player_name":
            return self._timed(self._candidate(op), args["player_id"])
        if op == "value_function":
            return self._timed(self._candidate(op), args["state"], args["player_id"])
        if op in MODEL_OPS:
            fn = self._candidate(op)
            if op == "apply_action":
                return self._timed(fn, args["state"], args["action"])
            return self._timed(fn, args["state"])
        if op in SAMPLER_OPS:
            fn = self._candidate(op)
            random.seed(args["seed"])
            history = [tuple(pair) for pair in args["obs_action_history"]]
            call_args = [history, args["player_id"]]
            if "last_is_terminal" in args and _accepts_third_argument(fn):
                call_args.append(args["last_is_terminal"])
            return self._timed(fn, *call_args)
        raise ValueError(f"unknown op: {op!r}")


def _accepts_third_argument(fn) -> bool:
    try:
        params = inspect.signature(fn).parameters.values()
    except (TypeError, ValueError):
        return False
    positional = [
        p for p in params
        if p.kind in (p.POSITIONAL_ONLY, p.POSITIONAL_OR_KEYWORD)
    ]
    return len(positional) >= 3 or any(p.kind == p.VAR_POSITIONAL for p in params)


def _error_reply(request_id, exc):
    return {
        "id": request_id,
        "ok": False,
        "error": {
            "type": type(exc).__name__,
            "message": str(exc),
            "trace": traceback.format_exc(),
        },
    }


def serve(session: Session, stdin=None, stdout=None):
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        try:
            request = json.loads(line)
            request_id = request["id"]
            op = request["op"]
            request_args = request.get("args", {})
            if not isinstance(request_id, int) or not isinstance(request_args, dict):
                raise ValueError("malformed request")
        except Exception as exc:
            stdout.write(_dumps(_error_reply(-1, exc)) + "\n")
            stdout.flush()
            continue
        if op == "shutdown":
            stdout.write(_dumps({"id": request_id, "ok": True, "value": "bye"}) + "\n")
            stdout.flush()
            return
        try:
            value = session.handle(op, request_args)
            reply = _dumps({"id": request_id, "ok": True, "value": value})
        except CallTimeout as exc:
            session.poisoned = True
            reply = _dumps(_error_reply(request_id, exc))
        except Exception as exc:
            reply = _dumps(_error_reply(request_id, exc))
        stdout.write(reply + "\n")
        stdout.flush()


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="cwm-host",
        description="Serve untrusted world-model source over stdin/stdout.",
    )
    parser.add_argument("--timeout-seconds", type=float, default=5.0)
    parser.add_argument("--scratch-dir", default=None)
    parser.add_argument("--max-memory-mb", type=int, default=512)
    options = parser.parse_args(argv)
    scratch = options.scratch_dir or tempfile.mkdtemp(prefix="cwm-host-")
    enforce_sandbox(scratch, options.max_memory_mb)
    serve(Session(options.timeout_seconds))


if __name__ == "__main__":
    main()
