//! Reply fragments and hostile rewrite backends for guardrail fuzzing.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sidekick_core::llm::{MockBackend, MockReply};

/// Counts fenced blocks the way a Markdown reader would pair them,
/// independently of the guardrail's own detector.
pub fn fenced_blocks(text: &str) -> usize {
    let bytes = text.as_bytes();
    let mut fences = 0;
    let mut i = 0;
    while i + 3 <= bytes.len() {
        if &bytes[i..i + 3] == b"```" {
            fences += 1;
            i += 3;
        } else {
            i += 1;
        }
    }
    fences / 2
}

pub const FRAGMENTS: &[&str] = &[
    "Your loop runs one step too far. ",
    "What is the last valid index of an array with n elements? ",
    "Look at line 6. ",
    "`values[i]` ",
    "``not a fence`` ",
    "\n",
    "```",
    "```c\n",
    "int x = 0;\n",
    "for (int i = 0; i < n; i++) {\n",
    "}\n",
    "````",
    "~~~\ncode\n~~~\n",
    "— ",
    "😀 ",
];

pub fn random_reply(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(0..20);
    (0..n).map(|_| FRAGMENTS[rng.random_range(0..FRAGMENTS.len())]).collect()
}

pub fn hostile_backend(kind: usize, seed: u64) -> MockBackend {
    match kind {
        // always answers with code
        0 => MockBackend::from_fn(|_| MockReply::Text("Sure:\n```c\nint main(void) { return 0; }\n```\n".into())),
        // echoes the reply it was asked to rewrite
        1 => MockBackend::from_fn(|req| MockReply::Text(req.messages[1].content.clone())),
        // fails
        2 => MockBackend::from_fn(|_| MockReply::Fail("backend down".into())),
        // complies
        3 => MockBackend::from_fn(|_| MockReply::Text("Think about which index is out of range.".into())),
        // random junk, sometimes fenced, sometimes with a dangling fence
        _ => {
            let rng = std::sync::Mutex::new(ChaCha8Rng::seed_from_u64(seed));
            MockBackend::from_fn(move |_| MockReply::Text(random_reply(&mut rng.lock().unwrap())))
        }
    }
}
