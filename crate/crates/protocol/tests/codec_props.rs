use proptest::prelude::*;
use zoosim_protocol::codec::{
    decode_request, decode_response, encode_request_flags, encode_response, read_request_bytes, CodecError, Item,
    Response, Status,
};

fn command() -> impl Strategy<Value = String> {
    prop_oneof!["vget /[a-z]{1,6}(/[a-z0-9]{1,6}){0,3}( [a-z0-9.-]{1,8}){0,3}", any::<String>(),]
}

fn item() -> impl Strategy<Value = Item> {
    prop_oneof![
        any::<String>().prop_map(Item::Text),
        (0u8..4, 0u32..6, 0u32..6, prop::collection::vec(any::<u8>(), 0..64))
            .prop_map(|(modality, width, height, payload)| Item::Frame { modality, width, height, payload }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn request_round_trip(id in any::<u32>(), cmds in prop::collection::vec(command(), 1..12)) {
        let batch = cmds.len() > 1;
        let bytes = encode_request_flags(id, batch, &cmds);
        let r = decode_request(&bytes).unwrap();
        prop_assert_eq!(r.id, id);
        prop_assert_eq!(r.batch, batch);
        prop_assert_eq!(&r.commands, &cmds);
        prop_assert_eq!(read_request_bytes(&mut &bytes[..]).unwrap(), bytes);
    }

    #[test]
    fn response_round_trip(id in any::<u32>(), status in 0u8..3, items in prop::collection::vec(item(), 0..8)) {
        let status = [Status::Ok, Status::Partial, Status::Error][status as usize];
        let r = Response { id, status, items };
        prop_assert_eq!(decode_response(&encode_response(&r)).unwrap(), r);
    }

    #[test]
    fn every_strict_prefix_is_truncated(cmds in prop::collection::vec(command(), 1..4), cut in any::<prop::sample::Index>()) {
        let bytes = encode_request_flags(5, cmds.len() > 1, &cmds);
        let n = cut.index(bytes.len());
        prop_assert_eq!(decode_request(&bytes[..n]), Err(CodecError::Truncated));
    }

    #[test]
    fn foreign_magic_rejected(magic in any::<[u8; 4]>(), cmd in command()) {
        prop_assume!(&magic != b"UZP1");
        let mut bytes = encode_request_flags(1, false, &[cmd]);
        bytes[..4].copy_from_slice(&magic);
        prop_assert_eq!(decode_request(&bytes), Err(CodecError::BadMagic(magic)));
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..80)) {
        let _ = decode_request(&bytes);
        let _ = decode_response(&bytes);
    }
}
