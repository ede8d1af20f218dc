//! Porter stemmer checked against stems frozen from an independent reference
//! implementation.

use memir::tokenizer::porter_stem;

#[test]
fn matches_reference_stems() {
    let data = include_str!("data/porter_oracle.tsv");
    let mut mismatches = Vec::new();
    let mut n = 0;
    for line in data.lines().filter(|l| !l.starts_with('#')) {
        let (word, want) = line.split_once('\t').unwrap();
        n += 1;
        let got = porter_stem(word);
        if got != want {
            mismatches.push(format!("{word}: got {got}, want {want}"));
        }
    }
    assert!(n > 1000);
    assert!(mismatches.is_empty(), "{} mismatches:\n{}", mismatches.len(), mismatches.join("\n"));
}
