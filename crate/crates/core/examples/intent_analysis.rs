//! Rule-based intent analysis: coarse category, fine parameter and
//! direction, and target extraction.

use urcsc::intent::{IntentBackend, Lexicon, LinkTarget, RuleBasedAnalyzer};

fn main() {
    let analyzer = RuleBasedAnalyzer::default();
    let lexicon = Lexicon::default();
    let requests = [
        "Please improve the data transmission quality",
        "Please reduce the data transmission latency",
        "Make it faster between transmitter 3 and receiver 4",
        "Please increase the transmit power",
        "Please encrypt my traffic",
        "Is it going to rain?",
    ];
    for text in requests {
        println!("{text:?}");
        println!("  scores: {:?}", lexicon.scores(text));
        match analyzer.analyze(text, LinkTarget::new(1, 2)) {
            Ok(i) => println!(
                "  {} {:?} {} on {} (confidence {:.2})",
                i.category, i.direction, i.parameter, i.target, i.confidence
            ),
            Err(e) => println!("  {e}"),
        }
    }
}
