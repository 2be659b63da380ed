db.Patients.insertOne({_id: "p1", age: 42})
db.Patients.insertOne({_id: "p2", age: 40, name: "Bob"})
