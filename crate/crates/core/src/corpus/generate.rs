use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::catalog::{Slot, SlotCatalog};
use super::templates::{fill, tokens, TemplateSet};
use super::{Corpus, Dialogue, Split, Turn, UserGoal, SILENCE};
use crate::error::Result;
use crate::seed::{derive_rng, tag};

pub fn sample_goal<R: Rng + ?Sized>(rng: &mut R, catalog: &SlotCatalog, oov: bool) -> UserGoal {
    let mut draw = |slot: Slot| {
        catalog
            .values(slot, oov)
            .choose(rng)
            .expect("catalog partition is nonempty")
            .clone()
    };
    UserGoal {
        cuisine: draw(Slot::Cuisine),
        location: draw(Slot::Location),
        party_size: draw(Slot::PartySize),
        price_range: draw(Slot::PriceRange),
        oov,
    }
}

fn pick<'a, R: Rng + ?Sized>(rng: &mut R, items: &'a [String]) -> &'a str {
    items.choose(rng).expect("template list is nonempty")
}

pub fn generate_dialogue<R: Rng + ?Sized>(goal: &UserGoal, rng: &mut R, templates: &TemplateSet) -> Dialogue {
    let sys = &templates.system;
    let mut volunteered: Vec<Slot> = Slot::ALL
        .into_iter()
        .filter(|_| rng.gen_bool(templates.p_mention))
        .collect();
    let missing: Vec<Slot> = Slot::ALL
        .into_iter()
        .filter(|s| !volunteered.contains(s))
        .collect();

    let mut request = tokens(pick(rng, &templates.request_frames));
    volunteered.shuffle(rng);
    for &slot in &volunteered {
        let phrase = pick(rng, templates.request_phrases.get(slot));
        request.extend(fill(phrase, goal.value(slot)));
    }

    let silence = || vec![SILENCE.to_string()];
    let mut exchanges: Vec<(Vec<String>, Vec<String>)> = Vec::new();
    exchanges.push((tokens(pick(rng, &templates.greetings)), tokens(&sys.greeting)));
    if missing.is_empty() {
        exchanges.push((request, tokens(&sys.searching)));
    } else {
        exchanges.push((request, tokens(&sys.acknowledge)));
        let mut user = silence();
        for &slot in &missing {
            exchanges.push((user, tokens(sys.ask.get(slot))));
            user = fill(pick(rng, templates.answers.get(slot)), goal.value(slot));
        }
        exchanges.push((user, tokens(&sys.searching)));
    }
    exchanges.push((silence(), goal.api_call(&sys.api_call_token)));

    let turns = exchanges
        .into_iter()
        .enumerate()
        .map(|(i, (user, system))| Turn { index: i + 1, user, system })
        .collect();
    Dialogue { turns, goal: Some(goal.clone()) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
    pub test_oov: usize,
}

impl Default for SplitSizes {
    fn default() -> Self {
        SplitSizes { train: 1000, dev: 1000, test: 1000, test_oov: 1000 }
    }
}

impl SplitSizes {
    pub fn get(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Dev => self.dev,
            Split::Test => self.test,
            Split::TestOov => self.test_oov,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub seed: u64,
    #[serde(default)]
    pub sizes: SplitSizes,
    #[serde(default)]
    pub catalog: SlotCatalog,
    #[serde(default)]
    pub templates: TemplateSet,
}

impl CorpusConfig {
    pub fn with_seed(seed: u64) -> Self {
        CorpusConfig {
            seed,
            sizes: SplitSizes::default(),
            catalog: SlotCatalog::default(),
            templates: TemplateSet::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusBundle {
    pub train: Corpus,
    pub dev: Corpus,
    pub test: Corpus,
    pub test_oov: Corpus,
}

impl CorpusBundle {
    pub fn get(&self, split: Split) -> &Corpus {
        match split {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Test => &self.test,
            Split::TestOov => &self.test_oov,
        }
    }
}

/// Generates one split; dialogue `i` draws from its own stream derived
/// from the master seed, the split name and `i`.
pub fn generate_split(config: &CorpusConfig, split: Split) -> Corpus {
    let dialogues = (0..config.sizes.get(split))
        .map(|i| {
            let mut rng = derive_rng(config.seed, &[tag(split.name()), i as u64]);
            let goal = sample_goal(&mut rng, &config.catalog, split.is_oov());
            generate_dialogue(&goal, &mut rng, &config.templates)
        })
        .collect();
    Corpus { dialogues, split }
}

pub fn generate_corpus(config: &CorpusConfig) -> Result<CorpusBundle> {
    config.catalog.validate()?;
    config.templates.validate()?;
    Ok(CorpusBundle {
        train: generate_split(config, Split::Train),
        dev: generate_split(config, Split::Dev),
        test: generate_split(config, Split::Test),
        test_oov: generate_split(config, Split::TestOov),
    })
}
