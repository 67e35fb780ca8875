//! Seeded word pool for task generation.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

pub(crate) const WORDS: [&str; 48] = [
    "apple", "anchor", "basket", "bridge", "candle", "canyon", "copper", "cradle", "dagger",
    "desert", "ember", "engine", "falcon", "feather", "garnet", "glacier", "hammer", "harbor",
    "island", "ivory", "jungle", "kettle", "lantern", "ledger", "marble", "meadow", "needle",
    "nimbus", "orchid", "oyster", "pebble", "pillar", "quartz", "quiver", "raisin", "ribbon",
    "saddle", "sequoia", "thimble", "timber", "umber", "urchin", "velvet", "violet", "walnut",
    "willow", "yarrow", "zephyr",
];

/// Picks one word.
pub(crate) fn pick(rng: &mut ChaCha8Rng) -> &'static str {
    WORDS.choose(rng).expect("word pool is nonempty")
}

/// Picks `n` distinct words.
pub(crate) fn pick_distinct(rng: &mut ChaCha8Rng, n: usize) -> Vec<&'static str> {
    debug_assert!(n <= WORDS.len());
    WORDS.choose_multiple(rng, n).copied().collect()
}
