int judge_fixture_value(void) { return 7; }
