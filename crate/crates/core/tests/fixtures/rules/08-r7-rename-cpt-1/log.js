db.Patients.insertOne({_id: "p1", age: 42, name: "Alice"})
db.Patients.updateOne({_id: "p1"}, {$rename: {name: "fullName"}})
