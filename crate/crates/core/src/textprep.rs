//! Tweet cleaning and tokenization.
//!
//! Cleaning applies a fixed rule set: URLs and `@mentions` are dropped,
//! `#tag` becomes `tag`, emoji and pictographs are removed, text is lowercased
//! and whitespace runs collapse to one space. The rules are re-applied until
//! nothing changes, so `clean` is idempotent even when a removal glues two
//! fragments into something another rule matches.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanConfig {
    pub lowercase: bool,
    pub strip_urls: bool,
    pub strip_mentions: bool,
    /// Keep the body of `#tag`; when false the whole hashtag is dropped.
    pub keep_hashtag_word: bool,
    pub strip_emoji: bool,
    pub collapse_whitespace: bool,
}

impl Default for CleanConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            strip_urls: true,
            strip_mentions: true,
            keep_hashtag_word: true,
            strip_emoji: true,
            collapse_whitespace: true,
        }
    }
}

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)(?:https?://\S*|\bwww\.\S+|\bt\.co/\S*)").unwrap())
}

fn mention_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"@\w+").unwrap())
}

fn hashtag_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"#\w*").unwrap())
}

/// Emoji, pictographs, flags, and the joiners/selectors that glue them.
pub fn is_emoji(c: char) -> bool {
    matches!(c as u32,
        0x1F000..=0x1FAFF
        | 0x2600..=0x27BF
        | 0x2300..=0x23FF
        | 0x2B00..=0x2BFF
        | 0xFE00..=0xFE0F
        | 0x200D
        | 0x20E3
        | 0x3030 | 0x303D | 0x3297 | 0x3299
        | 0xE0020..=0xE007F)
}

pub fn clean(raw: &str, cfg: &CleanConfig) -> String {
    let mut current = clean_pass(raw, cfg);
    // Each extra pass only removes text, so this settles quickly.
    for _ in 0..32 {
        let next = clean_pass(&current, cfg);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

fn clean_pass(raw: &str, cfg: &CleanConfig) -> String {
    let mut s = raw.to_string();
    if cfg.strip_urls {
        s = url_re().replace_all(&s, "").into_owned();
    }
    if cfg.strip_mentions {
        s = mention_re().replace_all(&s, "").into_owned();
    }
    if cfg.keep_hashtag_word {
        s.retain(|c| c != '#');
    } else {
        s = hashtag_re().replace_all(&s, "").into_owned();
    }
    if cfg.strip_emoji {
        s.retain(|c| !is_emoji(c));
    }
    if cfg.lowercase {
        s = s.to_lowercase();
    }
    if cfg.collapse_whitespace {
        s = s.split_whitespace().collect::<Vec<_>>().join(" ");
    }
    s
}

pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c,
            '\u{00A1}' | '\u{00A7}' | '\u{00AB}' | '\u{00B6}' | '\u{00B7}' | '\u{00BB}' | '\u{00BF}'
            | '\u{2010}'..='\u{2027}'
            | '\u{2030}'..='\u{205E}'
            | '\u{3001}'..='\u{3003}'
            | '\u{3008}'..='\u{3011}')
}

/// Whitespace split, then every punctuation character becomes its own token.
pub fn tokenize(cleaned: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for word in cleaned.split_whitespace() {
        let mut current = String::new();
        for c in word.chars() {
            if is_punctuation(c) {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(c.to_string());
            } else {
                current.push(c);
            }
        }
        if !current.is_empty() {
            tokens.push(current);
        }
    }
    tokens
}

/// `tokenize(clean(raw))`.
pub fn preprocess(raw: &str, cfg: &CleanConfig) -> Vec<String> {
    tokenize(&clean(raw, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(s: &str) -> String {
        clean(s, &CleanConfig::default())
    }

    #[test]
    fn clean_examples() {
        assert_eq!(c("Hello @user http://t.co/x #MeToo"), "hello metoo");
        assert_eq!(c(""), "");
        assert_eq!(c("RT @a: YOU are    #bad!!"), "rt : you are bad!!");
    }

    #[test]
    fn clean_strips_bare_shortlinks_and_www() {
        assert_eq!(c("see t.co/abc and www.example.com now"), "see and now");
        assert_eq!(c("HTTPS://EXAMPLE.COM/X ok"), "ok");
    }

    #[test]
    fn clean_removes_emoji_sequences() {
        assert_eq!(c("so fun 😂😂 👍🏽 ok ❤️"), "so fun ok");
        assert_eq!(c("family 👨‍👩‍👧 🇬🇷"), "family");
    }

    #[test]
    fn clean_reaches_fixed_point_when_removal_creates_a_url() {
        // the mention removal joins "http" and "://x" into a URL
        let once = c("http@a://x tail");
        assert_eq!(once, "tail");
        assert_eq!(c(&once), once);
    }

    #[test]
    fn hashtag_can_be_dropped_entirely() {
        let cfg = CleanConfig {
            keep_hashtag_word: false,
            ..CleanConfig::default()
        };
        assert_eq!(clean("stop #this now", &cfg), "stop now");
    }

    #[test]
    fn disabled_flags_leave_text_alone() {
        let cfg = CleanConfig {
            lowercase: false,
            strip_urls: false,
            strip_mentions: false,
            keep_hashtag_word: true,
            strip_emoji: false,
            collapse_whitespace: false,
        };
        assert_eq!(clean("A @b  http://c 😂", &cfg), "A @b  http://c 😂");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("you are bad!!"), ["you", "are", "bad", "!", "!"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("don't stop"), ["don", "'", "t", "stop"]);
        assert_eq!(tokenize("rt : you"), ["rt", ":", "you"]);
    }

    proptest! {
        #[test]
        fn clean_is_idempotent(s in "\\PC{0,60}") {
            let once = c(&s);
            prop_assert_eq!(c(&once), once);
        }

        #[test]
        fn clean_is_idempotent_on_tweet_like_text(
            s in "([A-Za-z@#:/. ]|http|t\\.co/|😂|\u{200D}){0,40}"
        ) {
            let once = c(&s);
            prop_assert_eq!(c(&once), once);
        }

        #[test]
        fn clean_output_has_no_stripped_classes(
            s in "([A-Za-z0-9@#:/. !]|https://|t\\.co/|😂|🇬|\u{FE0F}){0,40}"
        ) {
            let out = c(&s);
            prop_assert!(!out.contains('#'));
            prop_assert!(!mention_re().is_match(&out));
            prop_assert!(!url_re().is_match(&out));
            prop_assert!(!out.chars().any(is_emoji));
        }

        #[test]
        fn tokens_are_non_empty_and_rejoin_to_a_fixed_point(s in "\\PC{0,60}") {
            let toks = tokenize(&s);
            prop_assert!(toks.iter().all(|t| !t.is_empty()));
            prop_assert_eq!(tokenize(&toks.join(" ")), toks);
        }
    }
}
