//! The parameter store: seed, query, update, constraint checks and the
//! canonical SQL form.

use urcsc::store::{parse_sql, SeedConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store = SeedConfig::default_config().seed()?;

    let sel = "select ENCODING_DEPTH, snr_db from Links where TX_ID=1 and rx_id=2";
    let stmt = parse_sql(&format!("{sel};"))?;
    println!("canonical: {stmt}");
    println!("rows:      {:?}", store.execute(&stmt)?.rows());

    let n = store.execute_sql("UPDATE links SET encoding_depth = encoding_depth + 1 WHERE link_id = 1;")?;
    println!("updated {} row(s)", n.affected());
    let depth = store.execute_sql("SELECT encoding_depth FROM links WHERE link_id = 1;")?;
    println!("depth now {:?}", depth.scalar());

    let before = store.fingerprint();
    match store.execute_sql("UPDATE links SET encoding_depth = 13 WHERE link_id = 1;") {
        Ok(_) => println!("unexpected success"),
        Err(e) => println!("rejected: {e}"),
    }
    assert_eq!(before, store.fingerprint());

    match parse_sql("SELEC x FRM y;") {
        Ok(_) => println!("unexpected parse"),
        Err(e) => println!("syntax error: {e}"),
    }
    Ok(())
}
