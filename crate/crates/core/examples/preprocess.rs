//! Cleans and tokenizes a few tweets.
//!
//! `cargo run --example preprocess -- "optional tweet text"`

use harassnet::textprep::{clean, preprocess, tokenize, CleanConfig};

fn main() {
    let mut tweets: Vec<String> = std::env::args().skip(1).collect();
    if tweets.is_empty() {
        tweets = vec![
            "@user1 You're SO pathetic lol #loser https://t.co/xyz".into(),
            "gonna find u and hurt u 😡😡 @someone".into(),
            "what a   lovely day!! #sunshine www.example.com".into(),
        ];
    }
    let cfg = CleanConfig::default();
    for t in &tweets {
        let cleaned = clean(t, &cfg);
        println!("raw:     {t}");
        println!("cleaned: {cleaned}");
        println!("tokens:  {:?}\n", tokenize(&cleaned));
    }

    // Dropping whole hashtags instead of keeping their body.
    let no_tags = CleanConfig {
        keep_hashtag_word: false,
        ..cfg
    };
    println!("without hashtags: {:?}", preprocess(&tweets[0], &no_tags));
}
