//! Bundled models.
//!
//! `csma` and `firewire` are recreations of the benchmark protocols with
//! counters unfolded into locations. Their numbers are indicative only.

use super::{Pta, PtaSpec};
use crate::error::ModelError;

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 4] = ["example", "csma1", "csma2", "firewire"];

/// Communication protocol with message loss: `send` succeeds with
/// probability 0.9, a lost message is retried after 8 time units and the
/// sender gives up once `y >= 18`.
pub fn example_pta() -> Pta {
    let mut s = PtaSpec::new(&["x", "y"], "init");
    s.location("init", "x <= 2 & y <= 24")
        .location("lost", "x <= 8")
        .location("fail", "true")
        .location("done", "true")
        .edge("init", "send", "x >= 1", &[("0.9", &[], "done"), ("0.1", &[], "lost")])
        .edge("init", "t_out", "y >= 18", &[("1", &[], "fail")])
        .edge("lost", "retry", "x = 8", &[("1", &["x"], "init")])
        .edge("fail", "f", "true", &[("1", &[], "fail")])
        .edge("done", "d", "true", &[("1", &[], "done")]);
    s.build().expect("example model is well formed")
}

const SIGMA: i64 = 26;
const SLOT: i64 = 52;
const LAMBDA: i64 = 808;

/// Two stations sharing a bus. Both start sending and collide; after the
/// k-th collision each picks a backoff slot and they collide again with
/// probability `1/2^k`, with `k` capped at `bcmax`. Once the picks differ,
/// both messages go out one after the other, so `done` is reached no earlier
/// than `2 * 808 + 26` time units after the start.
pub fn csma(bcmax: u32) -> Result<Pta, ModelError> {
    if !(1..=2).contains(&bcmax) {
        return Err(ModelError::Invalid(format!("csma supports bcmax 1 or 2, not {bcmax}")));
    }
    let mut s = PtaSpec::new(&["x", "y"], "start");
    s.location("start", &format!("x <= {SIGMA}"));
    s.edge("start", "send", "true", &[("1", &["x"], "wait_1")]);
    for k in 1..=bcmax {
        let window = SLOT * ((1 << k) - 1);
        let wait = format!("wait_{k}");
        s.location(&wait, &format!("x <= {SIGMA}"));
        s.edge(&wait, "detect", &format!("x >= {SIGMA}"), &[("1", &["x"], &format!("flip_{k}_1"))]);
        for j in 1..=k {
            let flip = format!("flip_{k}_{j}");
            let next = if j < k { format!("flip_{k}_{}", j + 1) } else { format!("same_{k}") };
            s.location(&flip, "x <= 0");
            s.edge(&flip, "pick", "true", &[("1/2", &["x"], &format!("diff_{k}")), ("1/2", &["x"], &next)]);
        }
        let diff = format!("diff_{k}");
        s.location(&diff, &format!("x <= {window}"));
        s.edge(&diff, "transmit", "true", &[("1", &["x", "y"], "tx1")]);
        let same = format!("same_{k}");
        s.location(&same, &format!("x <= {window}"));
        let again = format!("wait_{}", (k + 1).min(bcmax));
        s.edge(&same, "collide", &format!("x >= {SLOT}"), &[("1", &["x"], &again)]);
    }
    s.location("tx1", &format!("y <= {LAMBDA}"))
        .location("tx2", &format!("y <= {}", 2 * LAMBDA + SIGMA))
        .location("done", "true")
        .edge("tx1", "next", &format!("y >= {LAMBDA}"), &[("1", &[], "tx2")])
        .edge("tx2", "finish", &format!("y >= {}", 2 * LAMBDA), &[("1", &[], "done")])
        .edge("done", "idle", "true", &[("1", &[], "done")]);
    Ok(s.build().expect("csma model is well formed"))
}

/// Root contention of the IEEE 1394 leader election. Each round both nodes
/// pick fast or slow waiting; equal picks lead to another round.
pub fn firewire() -> Pta {
    let mut s = PtaSpec::new(&["x"], "start");
    s.location("start", "x <= 360")
        .location("fast_fast", "x <= 850")
        .location("slow_slow", "x <= 1670")
        .location("mixed", "x <= 1670")
        .location("done", "true")
        .edge("start", "roll", "true", &[("1/4", &["x"], "fast_fast"), ("1/4", &["x"], "slow_slow"), ("1/2", &["x"], "mixed")])
        .edge("fast_fast", "retry", "x >= 760", &[("1", &["x"], "start")])
        .edge("slow_slow", "retry", "x >= 1590", &[("1", &["x"], "start")])
        .edge("mixed", "elect", "x >= 760", &[("1", &[], "done")])
        .edge("done", "idle", "true", &[("1", &[], "done")]);
    s.build().expect("firewire model is well formed")
}

pub fn by_name(name: &str) -> Option<Pta> {
    match name {
        "example" => Some(example_pta()),
        "csma1" => csma(1).ok(),
        "csma2" => csma(2).ok(),
        "firewire" => Some(firewire()),
        _ => None,
    }
}
