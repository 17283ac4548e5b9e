//! Documents, vocabularies, sparse count tables and the standard test
//! collection formats.

mod counts;
mod io;
mod smart;
mod split;
mod tokenize;

pub use counts::{build_counts, CountMatrix, Entry, Vocabulary};
pub use io::{load_counts, load_doc_ids, load_vocab, save_counts, save_doc_ids, save_vocab};
pub use smart::{
    parse_qrels, parse_qrels_str, parse_smart_collection, parse_smart_queries, parse_smart_str,
    QrelsLayout, RawDocument, RelevanceJudgments,
};
pub use split::{split_heldout, SplitPair};
pub use tokenize::{load_stopwords, tokenize, Stopwords};
