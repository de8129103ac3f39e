"""Deterministic simulated message network.

Each directed link has a base latency in ticks, truncated-Gaussian jitter,
and an independent drop probability. Every link draws from its own RNG
stream derived from the run seed, so adding a link never perturbs the
delivery schedule of another.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .seeds import derive_rng


@dataclass
class LinkSpec:
    """One directed communication channel between robots."""

    from_robot: str
    to_robot: str
    base_latency: int = 0  # ticks
    jitter_std: float = 0.0  # ticks, Gaussian truncated at zero
    drop_prob: float = 0.0


@dataclass
class Envelope:
    payload: object
    send_tick: int
    deliver_tick: int
    sender: str
    seq: int = 0


@dataclass
class LinkStats:
    sent: int = 0
    delivered: int = 0
    dropped: int = 0


class Network:
    """Mailbox-based delivery keyed on the logical clock."""

    def __init__(self, links: list, root_seed: int):
        self.links = list(links)
        self._rngs = {}
        self._inboxes: dict = {}
        self._stats: dict = {}
        self._seq = 0
        for link in self.links:
            key = (link.from_robot, link.to_robot)
            self._rngs[key] = derive_rng(root_seed, "link", link.from_robot, link.to_robot)
            self._stats[key] = LinkStats()
            self._inboxes.setdefault(link.to_robot, [])

    def links_from(self, robot_id: str) -> list:
        return [lk for lk in self.links if lk.from_robot == robot_id]

    def send(self, link: LinkSpec, msg, tick: int):
        """Send a message on a link; returns the Envelope or None if dropped."""
        key = (link.from_robot, link.to_robot)
        rng = self._rngs[key]
        stats = self._stats[key]
        stats.sent += 1
        if rng.random() < link.drop_prob:
            stats.dropped += 1
            return None
        jitter = int(round(max(0.0, float(rng.normal(0.0, link.jitter_std)))))
        env = Envelope(
            payload=msg,
            send_tick=tick,
            deliver_tick=tick + link.base_latency + jitter,
            sender=link.from_robot,
            seq=self._seq,
        )
        self._seq += 1
        self._inboxes.setdefault(link.to_robot, []).append(env)
        return env

    def poll(self, robot_id: str, tick: int) -> list:
        """Remove and return every due message, deterministically ordered."""
        inbox = self._inboxes.get(robot_id, [])
        due = [e for e in inbox if e.deliver_tick <= tick]
        self._inboxes[robot_id] = [e for e in inbox if e.deliver_tick > tick]
        due.sort(key=lambda e: (e.deliver_tick, e.send_tick, e.sender, e.seq))
        for env in due:
            key = None
            for link in self.links:
                if link.from_robot == env.sender and link.to_robot == robot_id:
                    key = (link.from_robot, link.to_robot)
                    break
            if key is not None:
                self._stats[key].delivered += 1
        return [e.payload for e in due]

    def pending_count(self) -> int:
        return sum(len(v) for v in self._inboxes.values())

    def stats(self) -> dict:
        """Per-link counters keyed by 'from->to'."""
        return {
            f"{k[0]}->{k[1]}": {
                "sent": s.sent,
                "delivered": s.delivered,
                "dropped": s.dropped,
            }
            for k, s in self._stats.items()
        }
