# Lookahead auctions with pooling: exact discrete machinery and verification
