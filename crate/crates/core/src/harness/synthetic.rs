//! Seeded five-source benchmark: API documentation, reasoning traces,
//! mixed FAQ content, redundant boilerplate and noisy text.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Document, Split};

pub const API: &str = "api_docs";
pub const REASONING: &str = "reasoning";
pub const FAQ: &str = "faq";
pub const BOILERPLATE: &str = "boilerplate";
pub const NOISY: &str = "noisy";
pub const DOMAIN: &str = "synthetic";

const BOILERPLATE_POSITIVES: usize = 3;

const ENDPOINTS: &[&str] = &[
    "users", "orders", "invoices", "sessions", "projects", "webhooks", "tokens", "reports",
    "accounts", "events", "uploads", "metrics",
];
const VERBS: &[&str] = &["get", "post", "put", "delete", "patch"];
const PARAMS: &[&str] = &[
    "limit", "offset", "cursor", "filter", "sort", "page_size", "include", "fields", "since",
    "region",
];
const API_NOUNS: &[&str] = &[
    "request", "response", "header", "payload", "schema", "status", "client", "timeout",
    "pagination", "endpoint", "parameter", "field", "version", "authentication", "retry",
    "json", "query", "token",
];
const REASON_NOUNS: &[&str] = &[
    "equation", "total", "value", "product", "difference", "remainder", "ratio", "sum",
    "quantity", "estimate", "constraint", "result",
];
const REASON_STEPS: &[&str] = &[
    "First we compute the {a} from the given {b}.",
    "Then we subtract the {a} to isolate the {b}.",
    "Therefore the {a} equals the {b} divided by two.",
    "We verify the {a} by substituting it into the {b}.",
    "Hence the {a} must exceed the {b}, because each step preserves the order.",
    "Assume the {a} is known; then the {b} follows by multiplication.",
];
const FAQ_TOPICS: &[&str] = &[
    "install", "configure", "upgrade", "settings", "password", "login", "backup", "sync",
    "plugin", "license",
];
const CHAT_WORDS: &[&str] = &[
    "weather", "holiday", "recipe", "garden", "movie", "music", "coffee", "football", "beach",
    "birthday", "painting", "travel", "weekend", "dinner", "picnic", "concert",
];
const CHAT_TEMPLATES: &[&str] = &[
    "What a lovely {a} we had during the {b}.",
    "My friend talked about the {a} and the {b} all evening.",
    "Is the {a} better than the {b} this year?",
    "We planned a {a} after the {b} with the family.",
];
const NOISE_ALPHABET: &[u8] = b"bcdfghjklmnpqrstvwxz0123456789";
const NOISE_SYMBOLS: &[&str] = &["#", "@@", "%$", "~~", "^", "|", "{", "]", "\"", "&*"];
const PADDING: &[&str] = &[
    "It is what it is and that is how it is.",
    "The thing is a thing that is the thing that it is.",
    "This is the part where this part is the part.",
    "As noted, what is noted is what was noted.",
];

fn fill(template: &str, rng: &mut ChaCha8Rng, pool: &[&str]) -> String {
    let a = pool.choose(rng).expect("non-empty pool");
    let b = pool.choose(rng).expect("non-empty pool");
    template.replace("{a}", a).replace("{b}", b)
}

fn api_positive(rng: &mut ChaCha8Rng) -> String {
    let ep = ENDPOINTS.choose(rng).unwrap();
    let verb = VERBS.choose(rng).unwrap().to_uppercase();
    let p1 = PARAMS.choose(rng).unwrap();
    let p2 = PARAMS.choose(rng).unwrap();
    let n: Vec<&str> = API_NOUNS.choose_multiple(rng, 6).copied().collect();
    format!(
        "The {verb} /v2/{ep} endpoint accepts a {p1} parameter and returns a paginated {} with a {} field.\n\
         Set the authorization header to a bearer token before sending the {}.\n\
         If the {} exceeds the configured timeout, the client should retry with exponential backoff.\n\
         Use {p2} to narrow the {} and check the {} code of every response.",
        n[0], n[1], n[2], n[3], n[4], n[5]
    )
}

fn reasoning_positive(rng: &mut ChaCha8Rng) -> String {
    let steps = rng.random_range(4..=5);
    let mut lines: Vec<String> = REASON_STEPS
        .choose_multiple(rng, steps)
        .map(|t| fill(t, rng, REASON_NOUNS))
        .collect();
    let x = rng.random_range(2..40);
    let y = rng.random_range(2..40);
    lines.push(format!("So ({x} + {y}) * 2 = {}, which matches the {}.", (x + y) * 2, REASON_NOUNS.choose(rng).unwrap()));
    lines.join(" ")
}

fn faq_positive(rng: &mut ChaCha8Rng) -> String {
    let t = FAQ_TOPICS.choose(rng).unwrap();
    let n = API_NOUNS.choose(rng).unwrap();
    format!(
        "Q: How do I {t} the client? A: Open the settings page, choose {t}, and confirm the {n}.\n\
         Q: What if the {t} step fails? A: Check the status message and try the request again."
    )
}

fn chit_chat(rng: &mut ChaCha8Rng, sentences: usize) -> String {
    (0..sentences)
        .map(|_| fill(CHAT_TEMPLATES.choose(rng).unwrap(), rng, CHAT_WORDS))
        .collect::<Vec<_>>()
        .join(" ")
}

fn noise(rng: &mut ChaCha8Rng, tokens: usize) -> String {
    (0..tokens)
        .map(|_| {
            if rng.random_bool(0.3) {
                NOISE_SYMBOLS.choose(rng).unwrap().to_string()
            } else {
                let len = rng.random_range(4..9);
                (0..len)
                    .map(|_| *NOISE_ALPHABET.choose(rng).unwrap() as char)
                    .collect()
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Malformed text with exactly `tokens` tokens under the corpus tokenizer.
pub fn noise_with_tokens(rng: &mut ChaCha8Rng, tokens: usize) -> String {
    let mut out = String::new();
    let mut count = 0;
    while count < tokens {
        let w = noise(rng, 1);
        let n = crate::corpus::tokenize(&w).len();
        if count + n > tokens {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&w);
        count += n;
    }
    out
}

/// Syntactically plausible, semantically empty passage.
pub fn padding_text(rng: &mut ChaCha8Rng, sentences: usize) -> String {
    (0..sentences)
        .map(|_| *PADDING.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

struct Builder {
    docs: Vec<Document>,
}

impl Builder {
    fn push(&mut self, source: &str, split: Split, text: String, label: u8) {
        let n = self
            .docs
            .iter()
            .filter(|d| d.source == source && d.split == split)
            .count();
        let tag = match split {
            Split::Train => "train",
            Split::Validation => "val",
        };
        self.docs.push(Document {
            id: format!("{source}-{tag}-{n:03}"),
            text,
            source: source.to_string(),
            domain: DOMAIN.to_string(),
            split,
            label: Some(label),
        });
    }
}

/// Generates the benchmark for `seed`. Train documents carry stored labels:
/// 1 for on-task technical content, 0 otherwise.
pub fn generate_synthetic(seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Builder { docs: Vec::new() };

    for _ in 0..7 {
        let t = api_positive(&mut rng);
        b.push(API, Split::Train, t, 1);
    }
    for _ in 0..3 {
        let t = chit_chat(&mut rng, 3);
        b.push(API, Split::Train, t, 0);
    }

    for _ in 0..5 {
        let t = reasoning_positive(&mut rng);
        b.push(REASONING, Split::Train, t, 1);
    }
    for _ in 0..3 {
        let t = chit_chat(&mut rng, 3);
        b.push(REASONING, Split::Train, t, 0);
    }

    for _ in 0..4 {
        let t = faq_positive(&mut rng);
        b.push(FAQ, Split::Train, t, 1);
    }
    for _ in 0..12 {
        let t = chit_chat(&mut rng, 2);
        b.push(FAQ, Split::Train, t, 0);
    }

    // Boilerplate repeats documents that other sources already provide,
    // mostly the generic negatives.
    let mut positives: Vec<(String, u8)> = Vec::new();
    let mut negatives: Vec<(String, u8)> = Vec::new();
    for d in &b.docs {
        let entry = (d.text.clone(), d.label.unwrap_or(0));
        if entry.1 == 1 {
            positives.push(entry);
        } else {
            negatives.push(entry);
        }
    }
    positives.shuffle(&mut rng);
    negatives.shuffle(&mut rng);
    let copies: Vec<(String, u8)> = positives
        .into_iter()
        .take(BOILERPLATE_POSITIVES)
        .chain(negatives.into_iter().cycle().take(18 - BOILERPLATE_POSITIVES))
        .collect();
    for (text, label) in copies {
        b.push(BOILERPLATE, Split::Train, text, label);
    }

    for i in 0..12 {
        let len = rng.random_range(25..35);
        let t = noise(&mut rng, len);
        b.push(NOISY, Split::Train, t, (i % 2) as u8);
    }

    for _ in 0..8 {
        let t = api_positive(&mut rng);
        b.push("validation", Split::Validation, t, 1);
    }
    for _ in 0..4 {
        let t = reasoning_positive(&mut rng);
        b.push("validation", Split::Validation, t, 1);
    }
    for _ in 0..2 {
        let t = faq_positive(&mut rng);
        b.push("validation", Split::Validation, t, 1);
    }
    for _ in 0..10 {
        let t = chit_chat(&mut rng, 3);
        b.push("validation", Split::Validation, t, 0);
    }

    Corpus::new(b.docs).expect("generated corpus is valid")
}
