//! Build hybrid feature vectors for a few descriptions.
//!
//!     cargo run --example featurize_text

use food_compass::featurize::{fit_tfidf, EmbeddingProvider, FeaturizerState, HashedEmbedding, HeuristicConfig};
use food_compass::model::TargetKey;
use food_compass::text::default_stop_words;

pub fn run_example() -> food_compass::Result<Vec<Vec<f64>>> {
    let corpus = [
        "grilled chicken sandwich with lettuce and tomato",
        "chicken noodle soup",
        "fried chicken, breaded",
        "tomato soup, canned",
        "lettuce salad with ranch dressing",
    ];
    let tfidf = fit_tfidf(&corpus, 64, &default_stop_words())?;
    println!("vocabulary ({} terms): {:?}", tfidf.len(), tfidf.vocabulary.keys().collect::<Vec<_>>());

    let embedder = HashedEmbedding::new(32)?;
    let state = FeaturizerState {
        embedding: embedder.spec(),
        tfidf,
        heuristics: HeuristicConfig::default().spec_for(TargetKey::SodiumMg)?,
    };
    let layout = state.layout();
    println!("layout {layout:?}, total {}", layout.total());
    println!("fingerprint {}", &state.fingerprint()[..16]);

    let mut out = Vec::new();
    for text in ["fried chicken sandwich", "salted tomato soup"] {
        let v = state.featurize(&embedder, text)?;
        let [_, t0, h0] = v.offsets;
        let nonzero_tfidf = v.values[t0..h0].iter().filter(|x| **x != 0.0).count();
        println!("{text:?}: {} values, {nonzero_tfidf} tf-idf terms, heuristics {:?}", v.values.len(), &v.values[h0..]);
        assert_eq!(embedder.embed(text)?, v.values[..t0]);
        out.push(v.values);
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> food_compass::Result<()> {
    run_example().map(|_| ())
}
