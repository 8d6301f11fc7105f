//! Synthetic inputs shared by the benchmarks.

use edu_core::{Answer, QuestionBank, QuestionDraft};

/// `n` questions cycling through 2, 3 and 4 answers; the correct answer
/// rotates across segments.
pub fn drafts(n: usize, prefix: &str) -> Vec<QuestionDraft> {
    (0..n)
        .map(|q| {
            let answers = 2 + q % 3;
            QuestionDraft {
                id: format!("{prefix}{q}"),
                text: format!("What is {q} + {q}?"),
                answers: (0..answers)
                    .map(|a| {
                        Answer::new(format!("a{a}"), format!("{}", 2 * q + a), a == q % answers)
                    })
                    .collect(),
            }
        })
        .collect()
}

pub fn bank(n: usize) -> QuestionBank {
    QuestionBank::from_drafts(1, drafts(n, "q")).expect("synthetic drafts are valid")
}

#[cfg(test)]
mod tests {
    #[test]
    fn synthetic_bank_is_valid() {
        assert_eq!(super::bank(30).len(), 30);
    }
}
