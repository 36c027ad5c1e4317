#![no_main]

use libfuzzer_sys::fuzz_target;
use ocsnspd::optics::stack_response;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(stack) = ocsnspd::config::parse_stack_json(text) {
        // A parsed stack is validated, so evaluating it must not panic.
        let _ = stack_response(&stack, 1550.0);
    }
});
