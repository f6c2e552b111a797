use super::*;

#[test]
fn command_names_round_trip() {
    for c in Command::ALL {
        assert_eq!(Command::parse(c.name()).unwrap(), c);
    }
    assert!(matches!(Command::parse("frobnicate"), Err(Error::UnknownCommand(_))));
}
