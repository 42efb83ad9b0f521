//! Intent → controlled sentence → SQL, and screening of SQL that came from
//! somewhere else.

use urcsc::intent::{IntentBackend, LinkTarget, RuleBasedAnalyzer};
use urcsc::nl2sql::{
    parse_controlled, print_controlled, to_select, to_update, to_update_statement, validate_remote_sql,
    ControlledCommand,
};
use urcsc::optimizer::{plan_depth_update, DepthBounds};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let analyzer = RuleBasedAnalyzer::default();
    let intent = analyzer.analyze("Please improve the data transmission quality", LinkTarget::new(1, 2))?;
    let linkage = analyzer.linkage();

    let cmd = ControlledCommand::from_intent(&intent);
    let sentence = print_controlled(&cmd);
    println!("controlled: {sentence}");
    assert_eq!(parse_controlled(&sentence)?, cmd);
    println!("select:     {}", to_select(&cmd, linkage)?);

    let plan = plan_depth_update(intent.target, intent.direction, 7, DepthBounds::default())?;
    println!("update:     {}", to_update(&plan, linkage)?);

    let expected = to_update_statement(&plan, linkage)?;
    for candidate in [
        "update LINKS set encoding_depth = 8 where tx_id = 1 and rx_id = 2",
        "UPDATE links SET encoding_depth = 12 WHERE tx_id = 1 AND rx_id = 2;",
        "UPDATE audit SET detail = 'x';",
        "DROP TABLE links;",
    ] {
        match validate_remote_sql(candidate, &expected, linkage) {
            Ok(stmt) => println!("accepted:   {stmt}"),
            Err(e) => println!("rejected:   {candidate} ({e})"),
        }
    }

    if let Err(e) = parse_controlled("Please widen the encoding depth between transmitter 1 and receiver 2") {
        println!("{e}");
    }
    Ok(())
}
